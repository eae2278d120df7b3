//! Hit rate, mean reciprocal rank and the cross-system analyses.

mod confusion;
mod similarity;

pub use confusion::{confusion, gold_similarities, sim_gap_quadrants, ConfusionReport, Outcome};
pub use similarity::{
    mean_sim_stats, roundtrip_pairs, roundtrip_stats, same_up_to_case, GroupStats, MeanSimStats, RoundTripReport,
};

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Instance};
use crate::error::{Error, Result};
use crate::scoring::{ScoreRow, ScoreTable};

/// Rounds a percentage half-up to two decimals.
pub fn round2(value: f64) -> f64 {
    // The epsilon absorbs binary representation error at exact .xx5 ties.
    ((value * 100.0) + 0.5 + 1e-9).floor() / 100.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub system: String,
    pub n: usize,
    pub hits: usize,
    /// Percent, two decimals.
    pub hit_rate: f64,
    /// Percent, two decimals.
    pub mrr: f64,
    /// Unrounded fraction in `[0, 1]`.
    pub hit_fraction: f64,
    /// Unrounded fraction in `[0, 1]`.
    pub mrr_fraction: f64,
}

/// Pairs each row with its instance and gold key after checking alignment.
pub(crate) fn labeled_rows<'a>(
    table: &'a ScoreTable,
    dataset: &'a Dataset,
) -> Result<Vec<(&'a ScoreRow, &'a Instance, &'a str)>> {
    if dataset.is_empty() {
        return Err(Error::Metric("cannot evaluate an empty dataset".into()));
    }
    table.check_dataset(dataset)?;
    table
        .rows
        .iter()
        .zip(&dataset.instances)
        .map(|(row, inst)| {
            let gold = inst
                .gold
                .as_deref()
                .ok_or_else(|| Error::MissingGold(inst.id.clone()))?;
            Ok((row, inst, gold))
        })
        .collect()
}

fn gold_rank(row: &ScoreRow, gold: &str) -> Result<usize> {
    row.rank_of(gold).ok_or_else(|| Error::Validation {
        instance: row.id.clone(),
        message: format!("gold {gold:?} missing from ranking"),
    })
}

pub fn evaluate(table: &ScoreTable, dataset: &Dataset) -> Result<MetricsReport> {
    let rows = labeled_rows(table, dataset)?;
    let n = rows.len();
    let mut hits = 0usize;
    let mut reciprocal = 0.0f64;
    for (row, _, gold) in rows {
        if row.predicted == gold {
            hits += 1;
        }
        reciprocal += 1.0 / gold_rank(row, gold)? as f64;
    }
    let hit_fraction = hits as f64 / n as f64;
    let mrr_fraction = reciprocal / n as f64;
    Ok(MetricsReport {
        system: table.system.clone(),
        n,
        hits,
        hit_rate: round2(100.0 * hit_fraction),
        mrr: round2(100.0 * mrr_fraction),
        hit_fraction,
        mrr_fraction,
    })
}

/// Percentage of instances whose predicted image is the gold image.
pub fn hit_rate(table: &ScoreTable, dataset: &Dataset) -> Result<f64> {
    Ok(evaluate(table, dataset)?.hit_rate)
}

/// Mean reciprocal rank of the gold image, as a percentage.
pub fn mrr(table: &ScoreTable, dataset: &Dataset) -> Result<f64> {
    Ok(evaluate(table, dataset)?.mrr)
}
