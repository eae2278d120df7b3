//! Plain tables for reports, rendered as aligned markdown or CSV.

use vwsd_core::metrics::{ConfusionReport, MeanSimStats, MetricsReport, RoundTripReport};

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub title: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(title: impl Into<String>, headers: &[&str]) -> Self {
        Table {
            title: title.into(),
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_markdown(&self) -> String {
        let widths: Vec<usize> = (0..self.headers.len())
            .map(|c| {
                self.rows
                    .iter()
                    .map(|r| r[c].chars().count())
                    .chain(std::iter::once(self.headers[c].chars().count()))
                    .max()
                    .unwrap_or(0)
                    .max(3)
            })
            .collect();
        let line = |cells: &[String]| {
            let padded: Vec<String> = cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect();
            format!("| {} |\n", padded.join(" | "))
        };
        let mut out = format!("### {}\n\n", self.title);
        out.push_str(&line(&self.headers));
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        out.push_str(&line(&rule));
        for r in &self.rows {
            out.push_str(&line(r));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is UTF-8")
    }
}

pub fn pct(x: f64) -> String {
    format!("{x:.2}")
}

pub fn sim(x: f64) -> String {
    format!("{x:.4}")
}

fn opt_sim(x: Option<f64>) -> String {
    x.map(sim).unwrap_or_else(|| "-".into())
}

pub fn metrics_table(reports: &[MetricsReport]) -> Table {
    let mut t = Table::new("System performance", &["System", "n", "hit rate", "mrr"]);
    for r in reports {
        t.rows
            .push(vec![r.system.clone(), r.n.to_string(), pct(r.hit_rate), pct(r.mrr)]);
    }
    t
}

pub fn confusion_tables(r: &ConfusionReport) -> Vec<Table> {
    let headers = [
        "",
        &format!("{} correct", r.system_b),
        &format!("{} incorrect", r.system_b),
    ];
    let labels = [format!("{} correct", r.system_a), format!("{} incorrect", r.system_a)];
    let mut tables = Vec::new();
    if let Some(means) = &r.quadrant_means {
        let mut t = Table::new(
            format!(
                "Difference in sim(text, gold image): {} minus {}",
                r.system_b, r.system_a
            ),
            &headers,
        );
        for (i, label) in labels.iter().enumerate() {
            t.rows
                .push(vec![label.clone(), opt_sim(means[i][0]), opt_sim(means[i][1])]);
        }
        tables.push(t);
    }
    let mut t = Table::new(format!("Instance count (n = {})", r.n), &headers);
    for (i, label) in labels.iter().enumerate() {
        t.rows.push(vec![
            label.clone(),
            r.counts[i][0].to_string(),
            r.counts[i][1].to_string(),
        ]);
    }
    tables.push(t);
    tables
}

pub fn mean_sim_table(stats: &[MeanSimStats]) -> Table {
    let mut t = Table::new(
        "Mean similarity",
        &["System", "sim(text, gold img)", "sim(text, all imgs)"],
    );
    for s in stats {
        t.rows
            .push(vec![s.system.clone(), sim(s.mean_sim_gold), sim(s.mean_sim_all)]);
    }
    t
}

pub fn roundtrip_table(r: &RoundTripReport) -> Table {
    let mut t = Table::new(
        format!("Round-trip translation groups ({})", r.system),
        &["Group", "count", "mean sim(text, gold img)"],
    );
    t.rows.push(vec![
        "identical up to case".into(),
        r.identical.count.to_string(),
        opt_sim(r.identical.mean_sim_gold),
    ]);
    t.rows.push(vec![
        "different".into(),
        r.different.count.to_string(),
        opt_sim(r.different.mean_sim_gold),
    ]);
    t
}
