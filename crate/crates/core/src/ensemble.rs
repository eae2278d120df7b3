//! Equal-weight (or weighted) probability averaging across systems.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring::{ScoreKind, ScoreRow, ScoreTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub name: String,
    pub members: Vec<String>,
    /// Normalized to sum to 1.
    pub weights: Vec<f64>,
}

impl EnsembleSpec {
    /// Equal weights when `weights` is `None`.
    pub fn new(name: impl Into<String>, members: Vec<String>, weights: Option<Vec<f64>>) -> Result<Self> {
        let name = name.into();
        let fail = |message: String| Error::Ensemble {
            name: name.clone(),
            message,
        };
        if members.is_empty() {
            return Err(fail("no members".into()));
        }
        for (i, m) in members.iter().enumerate() {
            if members[..i].contains(m) {
                return Err(fail(format!("member {m:?} listed twice")));
            }
        }
        let weights = weights.unwrap_or_else(|| vec![1.0; members.len()]);
        if weights.len() != members.len() {
            return Err(fail(format!(
                "{} weights for {} members",
                weights.len(),
                members.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(fail("weights must be positive and finite".into()));
        }
        let total: f64 = weights.iter().sum();
        let weights = weights.iter().map(|w| w / total).collect();
        Ok(EnsembleSpec { name, members, weights })
    }

    pub fn equal(name: impl Into<String>, members: Vec<String>) -> Result<Self> {
        Self::new(name, members, None)
    }
}

/// Averages member probabilities per candidate and re-ranks.
///
/// `tables` may hold more systems than the ensemble uses; members are
/// looked up by name. The output's raw scores are the averaged
/// probabilities.
pub fn ensemble_tables(tables: &[ScoreTable], spec: &EnsembleSpec) -> Result<ScoreTable> {
    if spec.members.is_empty() {
        return Err(Error::Ensemble {
            name: spec.name.clone(),
            message: "no members".into(),
        });
    }
    let members = spec
        .members
        .iter()
        .map(|m| {
            tables.iter().find(|t| &t.system == m).ok_or_else(|| Error::Ensemble {
                name: spec.name.clone(),
                message: format!("no score table for member {m:?}"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let first = members[0];
    for other in &members[1..] {
        first.check_aligned(other)?;
    }

    let mut rows = Vec::with_capacity(first.rows.len());
    let mut terms = Vec::with_capacity(members.len());
    for (r, base) in first.rows.iter().enumerate() {
        let mut probs = Vec::with_capacity(base.candidates.len());
        for c in 0..base.candidates.len() {
            terms.clear();
            terms.extend(
                members
                    .iter()
                    .zip(&spec.weights)
                    .map(|(t, w)| w * t.rows[r].probs[c]),
            );
            // Summing in sorted order makes the result independent of
            // member order when weights are equal.
            terms.sort_by(f64::total_cmp);
            probs.push(terms.iter().sum::<f64>());
        }
        rows.push(ScoreRow::new(base.id.clone(), base.candidates.clone(), probs.clone(), probs));
    }
    Ok(ScoreTable {
        system: spec.name.clone(),
        kind: Some(ScoreKind::Probability),
        rows,
    })
}
