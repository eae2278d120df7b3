use serde::{Deserialize, Serialize};

use super::math::rank_descending;
use crate::data::Dataset;
use crate::error::{Error, Result};

/// What a row's raw scores measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    /// Cosine between the query text and each candidate.
    Cosine,
    /// Best cosine between each candidate and any generated sample.
    MaxCosine,
    /// Negated smallest feature distance to any generated sample.
    NegL2,
    /// Averaged member probabilities.
    Probability,
}

/// Scores for the ten candidates of one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub id: String,
    pub candidates: Vec<String>,
    pub raw: Vec<f64>,
    pub probs: Vec<f64>,
    pub predicted: String,
    pub ranking: Vec<String>,
}

impl ScoreRow {
    /// Builds a row, ranking candidates by descending raw score with ties
    /// going to the lower candidate index. Probabilities are monotone in the
    /// raw scores, so this is also a descending-probability order, and it
    /// stays well defined when extreme logits underflow to equal
    /// probabilities.
    pub fn new(id: String, candidates: Vec<String>, raw: Vec<f64>, probs: Vec<f64>) -> Self {
        let ranking: Vec<String> = rank_descending(&raw)
            .into_iter()
            .map(|i| candidates[i].clone())
            .collect();
        ScoreRow {
            id,
            predicted: ranking.first().cloned().unwrap_or_default(),
            candidates,
            raw,
            probs,
            ranking,
        }
    }

    /// 1-based position of `key` in the ranking.
    pub fn rank_of(&self, key: &str) -> Option<usize> {
        self.ranking.iter().position(|k| k == key).map(|p| p + 1)
    }

    pub fn raw_of(&self, key: &str) -> Option<f64> {
        self.candidates.iter().position(|k| k == key).map(|i| self.raw[i])
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |message: String| Error::Validation {
            instance: self.id.clone(),
            message,
        };
        let n = self.candidates.len();
        if self.raw.len() != n || self.probs.len() != n || self.ranking.len() != n {
            return Err(fail("raw, probs and ranking must match the candidate count".into()));
        }
        if self.probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(fail("probability outside [0, 1]".into()));
        }
        let total: f64 = self.probs.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(fail(format!("probabilities sum to {total}")));
        }
        let mut sorted_rank = self.ranking.clone();
        sorted_rank.sort();
        let mut sorted_cand = self.candidates.clone();
        sorted_cand.sort();
        if sorted_rank != sorted_cand {
            return Err(fail("ranking is not a permutation of the candidates".into()));
        }
        if self.ranking.first() != Some(&self.predicted) {
            return Err(fail("predicted is not the top-ranked candidate".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub system: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<ScoreKind>,
    pub rows: Vec<ScoreRow>,
}

impl ScoreTable {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let table: ScoreTable = serde_json::from_str(text)?;
        for row in &table.rows {
            row.validate()?;
        }
        Ok(table)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Checks that both tables cover the same instances with the same
    /// candidate order.
    pub fn check_aligned(&self, other: &ScoreTable) -> Result<()> {
        if let Some((a, b)) = self
            .rows
            .iter()
            .zip(&other.rows)
            .find(|(a, b)| a.id != b.id || a.candidates != b.candidates)
        {
            let message = if a.id != b.id {
                format!("{:?} has instance {} where {:?} has {}", self.system, a.id, other.system, b.id)
            } else {
                format!("{:?} and {:?} list different candidates", self.system, other.system)
            };
            return Err(Error::Misaligned {
                instance: a.id.clone(),
                message,
            });
        }
        if self.rows.len() != other.rows.len() {
            let shorter = self.rows.len().min(other.rows.len());
            let longer = if self.rows.len() > other.rows.len() { self } else { other };
            return Err(Error::Misaligned {
                instance: longer.rows[shorter].id.clone(),
                message: format!(
                    "{:?} has {} rows but {:?} has {}",
                    self.system,
                    self.rows.len(),
                    other.system,
                    other.rows.len()
                ),
            });
        }
        Ok(())
    }

    /// Checks that the table covers `dataset` row for row.
    pub fn check_dataset(&self, dataset: &Dataset) -> Result<()> {
        for (row, inst) in self.rows.iter().zip(&dataset.instances) {
            if row.id != inst.id || row.candidates != inst.candidates {
                return Err(Error::Misaligned {
                    instance: inst.id.clone(),
                    message: format!("table {:?} does not match the dataset", self.system),
                });
            }
        }
        if self.rows.len() != dataset.len() {
            return Err(Error::Misaligned {
                instance: dataset
                    .instances
                    .get(self.rows.len())
                    .map(|i| i.id.clone())
                    .or_else(|| self.rows.get(dataset.len()).map(|r| r.id.clone()))
                    .unwrap_or_default(),
                message: format!(
                    "table {:?} has {} rows, dataset has {} instances",
                    self.system,
                    self.rows.len(),
                    dataset.len()
                ),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: &str, raw: Vec<f64>) -> ScoreRow {
        let cands: Vec<String> = (0..raw.len()).map(|i| format!("c{i}")).collect();
        let probs = super::super::math::softmax(&raw).unwrap();
        ScoreRow::new(id.into(), cands, raw, probs)
    }

    #[test]
    fn ranking_and_prediction() {
        let r = row("1", vec![0.1, 0.7, 0.7, 0.3]);
        assert_eq!(r.ranking, vec!["c1", "c2", "c3", "c0"]);
        assert_eq!(r.predicted, "c1");
        assert_eq!(r.rank_of("c0"), Some(4));
        assert_eq!(r.rank_of("zz"), None);
        r.validate().unwrap();
    }

    #[test]
    fn json_round_trip_is_exact() {
        let t = ScoreTable {
            system: "base".into(),
            kind: Some(ScoreKind::Cosine),
            rows: vec![row("000001", vec![0.1 + 0.2, 1.0 / 3.0, -0.0])],
        };
        let back = ScoreTable::from_json(&t.to_json().unwrap()).unwrap();
        assert_eq!(back, t);
        for (a, b) in back.rows[0].probs.iter().zip(&t.rows[0].probs) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn misalignment_detected() {
        let a = ScoreTable {
            system: "a".into(),
            kind: None,
            rows: vec![row("1", vec![0.0, 1.0]), row("2", vec![0.0, 1.0])],
        };
        let mut b = a.clone();
        b.rows[1].id = "3".into();
        assert!(matches!(a.check_aligned(&b), Err(Error::Misaligned { instance, .. }) if instance == "2"));
        let mut c = a.clone();
        c.rows.pop();
        assert!(a.check_aligned(&c).is_err());
        assert!(a.check_aligned(&a).is_ok());
    }
}
