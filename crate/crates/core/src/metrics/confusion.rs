use serde::{Deserialize, Serialize};

use super::labeled_rows;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::scoring::{ScoreKind, ScoreTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Correct = 0,
    Incorrect = 1,
}

impl Outcome {
    fn of(correct: bool) -> Self {
        if correct {
            Outcome::Correct
        } else {
            Outcome::Incorrect
        }
    }
}

/// 2x2 comparison of two systems. Index 0 is "correct", 1 "incorrect";
/// rows are system A, columns system B.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionReport {
    pub system_a: String,
    pub system_b: String,
    pub n: usize,
    pub counts: [[usize; 2]; 2],
    /// Mean of `sim_b(text, gold) - sim_a(text, gold)` per quadrant; `None`
    /// for empty quadrants.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrant_means: Option<[[Option<f64>; 2]; 2]>,
}

impl ConfusionReport {
    pub fn count(&self, a: Outcome, b: Outcome) -> usize {
        self.counts[a as usize][b as usize]
    }

    /// Counts in (correct, correct), (correct, incorrect), (incorrect,
    /// correct), (incorrect, incorrect) order.
    pub fn as_tuple(&self) -> (usize, usize, usize, usize) {
        let c = &self.counts;
        (c[0][0], c[0][1], c[1][0], c[1][1])
    }

    /// Instances system A got right.
    pub fn a_correct(&self) -> usize {
        self.counts[0][0] + self.counts[0][1]
    }

    pub fn b_correct(&self) -> usize {
        self.counts[0][0] + self.counts[1][0]
    }
}

fn outcomes(a: &ScoreTable, b: &ScoreTable, dataset: &Dataset) -> Result<Vec<(usize, usize)>> {
    a.check_aligned(b)?;
    let rows_a = labeled_rows(a, dataset)?;
    let rows_b = labeled_rows(b, dataset)?;
    Ok(rows_a
        .iter()
        .zip(&rows_b)
        .map(|((ra, _, gold), (rb, _, _))| {
            (
                Outcome::of(ra.predicted == *gold) as usize,
                Outcome::of(rb.predicted == *gold) as usize,
            )
        })
        .collect())
}

pub fn confusion(a: &ScoreTable, b: &ScoreTable, dataset: &Dataset) -> Result<ConfusionReport> {
    let mut counts = [[0usize; 2]; 2];
    for (oa, ob) in outcomes(a, b, dataset)? {
        counts[oa][ob] += 1;
    }
    Ok(ConfusionReport {
        system_a: a.system.clone(),
        system_b: b.system.clone(),
        n: dataset.len(),
        counts,
        quadrant_means: None,
    })
}

/// Per-instance cosine between the query and the gold image, read from a
/// text-query system's raw scores.
pub fn gold_similarities(table: &ScoreTable, dataset: &Dataset) -> Result<Vec<f64>> {
    if table.kind != Some(ScoreKind::Cosine) {
        return Err(Error::Metric(format!(
            "system {:?} does not carry text-image cosine scores",
            table.system
        )));
    }
    labeled_rows(table, dataset)?
        .into_iter()
        .map(|(row, inst, gold)| {
            row.raw_of(gold)
                .ok_or_else(|| Error::MissingGold(inst.id.clone()))
        })
        .collect()
}

/// Confusion counts plus, per quadrant, the mean gold-similarity gain of B
/// over A.
pub fn sim_gap_quadrants(
    a: &ScoreTable,
    b: &ScoreTable,
    sim_a_gold: &[f64],
    sim_b_gold: &[f64],
    dataset: &Dataset,
) -> Result<ConfusionReport> {
    if sim_a_gold.len() != dataset.len() || sim_b_gold.len() != dataset.len() {
        return Err(Error::Metric(format!(
            "expected {} gold similarities per system, got {} and {}",
            dataset.len(),
            sim_a_gold.len(),
            sim_b_gold.len()
        )));
    }
    let mut counts = [[0usize; 2]; 2];
    let mut sums = [[0.0f64; 2]; 2];
    for (i, (oa, ob)) in outcomes(a, b, dataset)?.into_iter().enumerate() {
        counts[oa][ob] += 1;
        sums[oa][ob] += sim_b_gold[i] - sim_a_gold[i];
    }
    let mut means = [[None; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            if counts[r][c] > 0 {
                means[r][c] = Some(sums[r][c] / counts[r][c] as f64);
            }
        }
    }
    Ok(ConfusionReport {
        system_a: a.system.clone(),
        system_b: b.system.clone(),
        n: dataset.len(),
        counts,
        quadrant_means: Some(means),
    })
}
