use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::labeled_rows;
use crate::data::{AuxQueryFile, Dataset};
use crate::error::{Error, Result};
use crate::scoring::{ScoreKind, ScoreTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanSimStats {
    pub system: String,
    /// Mean over instances of sim(text, gold image).
    pub mean_sim_gold: f64,
    /// Mean over instances of the mean sim(text, candidate) over all ten.
    pub mean_sim_all: f64,
}

pub fn mean_sim_stats(table: &ScoreTable, dataset: &Dataset) -> Result<MeanSimStats> {
    if table.kind != Some(ScoreKind::Cosine) {
        return Err(Error::Metric(format!(
            "system {:?} is not a text-query system; its scores are not text-image cosines",
            table.system
        )));
    }
    let rows = labeled_rows(table, dataset)?;
    let n = rows.len() as f64;
    let mut gold_sum = 0.0;
    let mut all_sum = 0.0;
    for (row, inst, gold) in rows {
        gold_sum += row
            .raw_of(gold)
            .ok_or_else(|| Error::MissingGold(inst.id.clone()))?;
        all_sum += row.raw.iter().sum::<f64>() / row.raw.len() as f64;
    }
    Ok(MeanSimStats {
        system: table.system.clone(),
        mean_sim_gold: gold_sum / n,
        mean_sim_all: all_sum / n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub count: usize,
    /// Mean foreign-space sim(text, gold); `None` for an empty group.
    pub mean_sim_gold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTripReport {
    pub system: String,
    /// Round trip equals the original up to capitalization.
    pub identical: GroupStats,
    pub different: GroupStats,
}

/// Round-trip comparison ignoring case only.
pub fn same_up_to_case(original: &str, round_tripped: &str) -> bool {
    original.to_lowercase() == round_tripped.to_lowercase()
}

/// `(original phrase, round-tripped phrase)` per instance id, taking the
/// round trip from an auxiliary text file.
pub fn roundtrip_pairs(
    dataset: &Dataset,
    round_trip: &AuxQueryFile,
) -> Result<BTreeMap<String, (String, String)>> {
    dataset
        .instances
        .iter()
        .map(|inst| {
            let back = round_trip.text(&inst.id).ok_or_else(|| Error::Metric(format!(
                "no round-trip translation for instance {} in {:?}",
                inst.id, round_trip.tag
            )))?;
            Ok((inst.id.clone(), (inst.full_phrase.clone(), back.to_string())))
        })
        .collect()
}

/// Splits instances by whether the round trip reproduced the phrase, and
/// averages the foreign-language system's gold similarity in each group.
pub fn roundtrip_stats(
    pairs: &BTreeMap<String, (String, String)>,
    foreign: &ScoreTable,
    dataset: &Dataset,
) -> Result<RoundTripReport> {
    if foreign.kind != Some(ScoreKind::Cosine) {
        return Err(Error::Metric(format!(
            "system {:?} does not carry text-image cosine scores",
            foreign.system
        )));
    }
    let mut count = [0usize; 2];
    let mut sum = [0.0f64; 2];
    for (row, inst, gold) in labeled_rows(foreign, dataset)? {
        let (original, back) = pairs.get(&inst.id).ok_or_else(|| {
            Error::Metric(format!("no round-trip pair for instance {}", inst.id))
        })?;
        let group = usize::from(!same_up_to_case(original, back));
        count[group] += 1;
        sum[group] += row
            .raw_of(gold)
            .ok_or_else(|| Error::MissingGold(inst.id.clone()))?;
    }
    let stats = |g: usize| GroupStats {
        count: count[g],
        mean_sim_gold: (count[g] > 0).then(|| sum[g] / count[g] as f64),
    };
    Ok(RoundTripReport {
        system: foreign.system.clone(),
        identical: stats(0),
        different: stats(1),
    })
}
