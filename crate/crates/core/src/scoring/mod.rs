//! Per-candidate scores and probabilities for one system.

mod math;
mod system;
mod table;

use rayon::prelude::*;

pub use math::{argmax, cosine, l2_distance, rank_descending, softmax};
pub use system::{
    resolve_query, QueryPlan, QuerySource, SampleMetric, SystemSpec, DEFAULT_L2_TEMPERATURE,
    DEFAULT_LOGIT_SCALE,
};
pub use table::{ScoreKind, ScoreRow, ScoreTable};

use crate::data::{AuxQueryFile, Dataset, EmbeddingStore, Instance, Kind};
use crate::error::{Error, Result};

fn lookup<'s>(store: &'s EmbeddingStore, space: &str, kind: Kind, key: &str, instance: &Instance) -> Result<&'s [f32]> {
    store.get(space, kind, key).ok_or_else(|| Error::MissingKey {
        space: space.to_string(),
        kind,
        key: key.to_string(),
        instance: instance.id.clone(),
    })
}

fn candidate_vectors<'s>(store: &'s EmbeddingStore, space: &str, instance: &Instance) -> Result<Vec<&'s [f32]>> {
    instance
        .candidates
        .iter()
        .map(|c| lookup(store, space, Kind::Image, c, instance))
        .collect()
}

fn scaled_softmax(raw: &[f64], scale: f64) -> Result<Vec<f64>> {
    let logits: Vec<f64> = raw.iter().map(|r| r * scale).collect();
    softmax(&logits)
}

impl SystemSpec {
    pub fn score_kind(&self) -> ScoreKind {
        match self.query {
            QuerySource::SdSamples {
                metric: SampleMetric::MaxCosine,
                ..
            } => ScoreKind::MaxCosine,
            QuerySource::SdSamples {
                metric: SampleMetric::MinL2,
                ..
            } => ScoreKind::NegL2,
            _ => ScoreKind::Cosine,
        }
    }
}

/// Scores candidates by cosine to one embedded query text.
pub fn score_text_query(
    text_key: &str,
    instance: &Instance,
    store: &EmbeddingStore,
    spec: &SystemSpec,
) -> Result<ScoreRow> {
    let query = lookup(store, &spec.space, Kind::Text, text_key, instance)?;
    let raw = candidate_vectors(store, &spec.space, instance)?
        .into_iter()
        .map(|c| cosine(query, c))
        .collect::<Result<Vec<f64>>>()?;
    let probs = scaled_softmax(&raw, spec.logit_scale)?;
    Ok(ScoreRow::new(instance.id.clone(), instance.candidates.clone(), raw, probs))
}

/// Scores candidates by their best match against a set of generated
/// samples: highest cosine, or smallest feature distance (negated so that
/// larger is better).
pub fn score_sample_query(
    sample_keys: &[String],
    instance: &Instance,
    store: &EmbeddingStore,
    spec: &SystemSpec,
    metric: SampleMetric,
) -> Result<ScoreRow> {
    if sample_keys.is_empty() {
        return Err(Error::System {
            system: spec.name.clone(),
            message: format!("instance {} has no samples", instance.id),
        });
    }
    let samples = sample_keys
        .iter()
        .map(|k| lookup(store, &spec.space, Kind::Image, k, instance))
        .collect::<Result<Vec<_>>>()?;
    let candidates = candidate_vectors(store, &spec.space, instance)?;
    let mut raw = Vec::with_capacity(candidates.len());
    for cand in candidates {
        let score = match metric {
            SampleMetric::MaxCosine => {
                let mut best = f64::NEG_INFINITY;
                for s in &samples {
                    best = best.max(cosine(cand, s)?);
                }
                best
            }
            SampleMetric::MinL2 => {
                let mut nearest = f64::INFINITY;
                for s in &samples {
                    nearest = nearest.min(l2_distance(cand, s)?);
                }
                -nearest
            }
        };
        raw.push(score);
    }
    let probs = match metric {
        SampleMetric::MaxCosine => scaled_softmax(&raw, spec.logit_scale)?,
        SampleMetric::MinL2 => scaled_softmax(&raw, 1.0 / spec.l2_temperature)?,
    };
    Ok(ScoreRow::new(instance.id.clone(), instance.candidates.clone(), raw, probs))
}

pub fn score_instance(
    instance: &Instance,
    spec: &SystemSpec,
    store: &EmbeddingStore,
    aux: &[AuxQueryFile],
) -> Result<ScoreRow> {
    match resolve_query(instance, spec, aux)? {
        QueryPlan::Text { key, .. } => score_text_query(&key, instance, store, spec),
        QueryPlan::Samples { keys, metric, .. } => score_sample_query(&keys, instance, store, spec, metric),
    }
}

/// Scores every instance. Instances are processed in parallel on `jobs`
/// threads (the global rayon pool when `None`); rows come back in dataset
/// order and the first failing instance's error is returned.
pub fn score_system(
    dataset: &Dataset,
    spec: &SystemSpec,
    store: &EmbeddingStore,
    aux: &[AuxQueryFile],
    jobs: Option<usize>,
) -> Result<ScoreTable> {
    spec.validate()?;
    let run = || -> Vec<Result<ScoreRow>> {
        dataset
            .instances
            .par_iter()
            .map(|inst| score_instance(inst, spec, store, aux))
            .collect()
    };
    let results = match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::System {
                system: spec.name.clone(),
                message: format!("cannot start worker pool: {e}"),
            })?
            .install(run),
        None => run(),
    };
    let rows = results
        .into_iter()
        .zip(&dataset.instances)
        .map(|(r, inst)| {
            r.map_err(|e| match e {
                e @ (Error::MissingKey { .. } | Error::MissingAuxRow { .. }) => e,
                other => Error::Instance {
                    instance: inst.id.clone(),
                    source: Box::new(other),
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScoreTable {
        system: spec.name.clone(),
        kind: Some(spec.score_kind()),
        rows,
    })
}
