use serde::{Deserialize, Serialize};

use crate::data::{AuxQueryFile, Instance, Kind};
use crate::error::{Error, Result};

pub const DEFAULT_LOGIT_SCALE: f64 = 100.0;
pub const DEFAULT_L2_TEMPERATURE: f64 = 1.0;

/// How generated samples are matched against a candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMetric {
    /// Best cosine similarity to any sample.
    MaxCosine,
    /// Smallest Euclidean feature distance to any sample (scored negated).
    MinL2,
}

/// Where a system's query comes from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum QuerySource {
    /// The instance's full phrase, embedded as text.
    Phrase,
    /// A generated context sentence from an auxiliary text file.
    Context { tag: String },
    /// A translated phrase from an auxiliary text file, embedded in the
    /// foreign-language space.
    Translation { tag: String },
    /// Generated sample images listed in an auxiliary sample file.
    SdSamples { tag: String, metric: SampleMetric },
}

impl QuerySource {
    pub fn tag(&self) -> Option<&str> {
        match self {
            QuerySource::Phrase => None,
            QuerySource::Context { tag }
            | QuerySource::Translation { tag }
            | QuerySource::SdSamples { tag, .. } => Some(tag),
        }
    }
}

/// A named scoring configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub name: String,
    pub space: String,
    pub query: QuerySource,
    pub logit_scale: f64,
    pub l2_temperature: f64,
}

impl SystemSpec {
    pub fn new(name: impl Into<String>, space: impl Into<String>, query: QuerySource) -> Self {
        SystemSpec {
            name: name.into(),
            space: space.into(),
            query,
            logit_scale: DEFAULT_LOGIT_SCALE,
            l2_temperature: DEFAULT_L2_TEMPERATURE,
        }
    }

    pub fn with_logit_scale(mut self, scale: f64) -> Self {
        self.logit_scale = scale;
        self
    }

    pub fn with_l2_temperature(mut self, temperature: f64) -> Self {
        self.l2_temperature = temperature;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |message: &str| Error::System {
            system: self.name.clone(),
            message: message.to_string(),
        };
        if self.name.is_empty() {
            return Err(fail("empty system name"));
        }
        if self.space.is_empty() {
            return Err(fail("empty space name"));
        }
        if !(self.logit_scale.is_finite() && self.logit_scale > 0.0) {
            return Err(fail("logit_scale must be a positive finite number"));
        }
        if !(self.l2_temperature.is_finite() && self.l2_temperature > 0.0) {
            return Err(fail("l2_temperature must be a positive finite number"));
        }
        Ok(())
    }
}

/// The concrete lookups one system performs for one instance.
#[derive(Debug, Clone, PartialEq)]
pub enum QueryPlan {
    Text {
        space: String,
        key: String,
    },
    Samples {
        space: String,
        keys: Vec<String>,
        metric: SampleMetric,
    },
}

impl QueryPlan {
    /// Every `(kind, key)` the plan reads from the store for `instance`,
    /// candidates included.
    pub fn required_keys<'a>(&'a self, instance: &'a Instance) -> Vec<(Kind, &'a str)> {
        let mut keys = Vec::new();
        match self {
            QueryPlan::Text { key, .. } => keys.push((Kind::Text, key.as_str())),
            QueryPlan::Samples { keys: samples, .. } => {
                keys.extend(samples.iter().map(|k| (Kind::Image, k.as_str())))
            }
        }
        keys.extend(instance.candidates.iter().map(|c| (Kind::Image, c.as_str())));
        keys
    }

    pub fn space(&self) -> &str {
        match self {
            QueryPlan::Text { space, .. } | QueryPlan::Samples { space, .. } => space,
        }
    }
}

fn find_aux<'a>(aux: &'a [AuxQueryFile], spec: &SystemSpec, tag: &str) -> Result<&'a AuxQueryFile> {
    aux.iter().find(|f| f.tag == tag).ok_or_else(|| Error::System {
        system: spec.name.clone(),
        message: format!("no auxiliary file with tag {tag:?}"),
    })
}

pub fn resolve_query(instance: &Instance, spec: &SystemSpec, aux: &[AuxQueryFile]) -> Result<QueryPlan> {
    let missing = |tag: &str| Error::MissingAuxRow {
        system: spec.name.clone(),
        tag: tag.to_string(),
        instance: instance.id.clone(),
    };
    match &spec.query {
        QuerySource::Phrase => Ok(QueryPlan::Text {
            space: spec.space.clone(),
            key: instance.full_phrase.clone(),
        }),
        QuerySource::Context { tag } | QuerySource::Translation { tag } => {
            let text = find_aux(aux, spec, tag)?
                .text(&instance.id)
                .ok_or_else(|| missing(tag))?;
            Ok(QueryPlan::Text {
                space: spec.space.clone(),
                key: text.to_string(),
            })
        }
        QuerySource::SdSamples { tag, metric } => {
            let keys = find_aux(aux, spec, tag)?
                .samples(&instance.id)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| missing(tag))?;
            Ok(QueryPlan::Samples {
                space: spec.space.clone(),
                keys: keys.to_vec(),
                metric: *metric,
            })
        }
    }
}
