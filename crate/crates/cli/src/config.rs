//! Declarative run configuration (TOML).
//!
//! Relative paths resolve against the directory holding the config file.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use vwsd_core::scoring::{DEFAULT_L2_TEMPERATURE, DEFAULT_LOGIT_SCALE};
use vwsd_core::{AuxKind, EnsembleSpec, QuerySource, SampleMetric, SystemSpec};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Markdown,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "markdown" | "md" => Ok(Format::Markdown),
            other => Err(format!("unknown format {other:?} (expected json, csv or markdown)")),
        }
    }
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Markdown => "md",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuxDecl {
    pub path: PathBuf,
    pub kind: AuxKind,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum QueryName {
    Phrase,
    Context,
    Translation,
    SdSamples,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemDecl {
    name: String,
    space: String,
    query: QueryName,
    tag: Option<String>,
    metric: Option<SampleMetric>,
    logit_scale: Option<f64>,
    l2_temperature: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnsembleDecl {
    name: String,
    members: Vec<String>,
    weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceDecl {
    pub normalized: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundTripDecl {
    /// Aux text file holding the round-tripped phrases.
    pub tag: String,
    /// Foreign-language text system whose gold similarities are grouped.
    pub system: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    dataset: PathBuf,
    split: Option<String>,
    gold: Option<PathBuf>,
    #[serde(default)]
    stores: Vec<PathBuf>,
    out: Option<PathBuf>,
    #[serde(default)]
    formats: Vec<Format>,
    endpoint: Option<String>,
    bearer_token: Option<String>,
    image_root: Option<String>,
    fetch_output: Option<PathBuf>,
    jobs: Option<usize>,
    #[serde(default)]
    aux: BTreeMap<String, AuxDecl>,
    #[serde(default)]
    spaces: BTreeMap<String, SpaceDecl>,
    #[serde(default)]
    system: Vec<SystemDecl>,
    #[serde(default)]
    ensemble: Vec<EnsembleDecl>,
    roundtrip: Option<RoundTripDecl>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub split: String,
    pub gold: Option<PathBuf>,
    pub stores: Vec<PathBuf>,
    pub out: PathBuf,
    pub formats: Vec<Format>,
    pub endpoint: Option<String>,
    pub bearer_token: Option<String>,
    pub image_root: Option<String>,
    pub fetch_output: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub aux: BTreeMap<String, AuxDecl>,
    pub spaces: BTreeMap<String, SpaceDecl>,
    pub systems: Vec<SystemSpec>,
    pub ensembles: Vec<EnsembleSpec>,
    pub roundtrip: Option<RoundTripDecl>,
}

fn resolve(base: &Path, p: PathBuf) -> PathBuf {
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

fn build_system(decl: SystemDecl) -> Result<SystemSpec, CliError> {
    let need_tag = |decl: &SystemDecl| {
        decl.tag.clone().ok_or_else(|| {
            CliError::Config(format!("system {:?}: query {:?} needs a `tag`", decl.name, decl.query))
        })
    };
    let query = match decl.query {
        QueryName::Phrase => QuerySource::Phrase,
        QueryName::Context => QuerySource::Context { tag: need_tag(&decl)? },
        QueryName::Translation => QuerySource::Translation { tag: need_tag(&decl)? },
        QueryName::SdSamples => QuerySource::SdSamples {
            tag: need_tag(&decl)?,
            metric: decl.metric.unwrap_or(SampleMetric::MaxCosine),
        },
    };
    let spec = SystemSpec::new(decl.name, decl.space, query)
        .with_logit_scale(decl.logit_scale.unwrap_or(DEFAULT_LOGIT_SCALE))
        .with_l2_temperature(decl.l2_temperature.unwrap_or(DEFAULT_L2_TEMPERATURE));
    spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(spec)
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let systems = raw
            .system
            .into_iter()
            .map(build_system)
            .collect::<Result<Vec<_>, _>>()?;
        let ensembles = raw
            .ensemble
            .into_iter()
            .map(|e| EnsembleSpec::new(e.name, e.members, e.weights).map_err(|e| CliError::Config(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        let split = raw.split.unwrap_or_else(|| {
            raw.dataset
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "data".into())
        });
        let config = RunConfig {
            dataset: resolve(base, raw.dataset),
            split,
            gold: raw.gold.map(|p| resolve(base, p)),
            stores: raw.stores.into_iter().map(|p| resolve(base, p)).collect(),
            out: resolve(base, raw.out.unwrap_or_else(|| PathBuf::from("out"))),
            formats: if raw.formats.is_empty() { vec![Format::Json] } else { raw.formats },
            endpoint: raw.endpoint,
            bearer_token: raw.bearer_token,
            image_root: raw.image_root,
            fetch_output: raw.fetch_output.map(|p| resolve(base, p)),
            jobs: raw.jobs,
            aux: raw
                .aux
                .into_iter()
                .map(|(tag, mut decl)| {
                    decl.path = resolve(base, decl.path);
                    (tag, decl)
                })
                .collect(),
            spaces: raw.spaces,
            systems,
            ensembles,
            roundtrip: raw.roundtrip,
        };
        config.check()?;
        Ok(config)
    }

    /// Cross-reference checks: unique names, known tags and members.
    fn check(&self) -> Result<(), CliError> {
        let mut names = HashSet::new();
        for name in self
            .systems
            .iter()
            .map(|s| &s.name)
            .chain(self.ensembles.iter().map(|e| &e.name))
        {
            if !names.insert(name.as_str()) {
                return Err(CliError::Config(format!("name {name:?} is defined twice")));
            }
        }
        for s in &self.systems {
            if let Some(tag) = s.query.tag() {
                let decl = self.aux.get(tag).ok_or_else(|| {
                    CliError::Config(format!("system {:?} references unknown aux tag {tag:?}", s.name))
                })?;
                let want = match s.query {
                    QuerySource::SdSamples { .. } => AuxKind::Samples,
                    _ => AuxKind::Text,
                };
                if decl.kind != want {
                    return Err(CliError::Config(format!(
                        "system {:?} needs a {want:?} aux file but {tag:?} is {:?}",
                        s.name, decl.kind
                    )));
                }
            }
        }
        for e in &self.ensembles {
            for m in &e.members {
                if self.system(m).is_none() {
                    return Err(CliError::Config(format!(
                        "ensemble {:?} references unknown system {m:?}",
                        e.name
                    )));
                }
            }
        }
        if let Some(rt) = &self.roundtrip {
            if !self.aux.contains_key(&rt.tag) {
                return Err(CliError::Config(format!("roundtrip references unknown aux tag {:?}", rt.tag)));
            }
            if self.system(&rt.system).is_none() {
                return Err(CliError::Config(format!(
                    "roundtrip references unknown system {:?}",
                    rt.system
                )));
            }
        }
        Ok(())
    }

    pub fn system(&self, name: &str) -> Option<&SystemSpec> {
        self.systems.iter().find(|s| s.name == name)
    }

    pub fn ensemble(&self, name: &str) -> Option<&EnsembleSpec> {
        self.ensembles.iter().find(|e| e.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
dataset = "data/trial.tsv"
gold = "data/trial.gold.txt"
stores = ["stores/clip.jsonl"]
formats = ["json", "markdown"]

[aux.k2t-2]
path = "aux/k2t2.tsv"
kind = "text"

[aux.sd]
path = "aux/sd.tsv"
kind = "samples"

[spaces.inception-feat]
normalized = false

[[system]]
name = "base"
space = "clip-en"
query = "phrase"

[[system]]
name = "k2t 2"
space = "clip-en"
query = "context"
tag = "k2t-2"

[[system]]
name = "sd-l2"
space = "inception-feat"
query = "sd_samples"
tag = "sd"
metric = "min_l2"
l2_temperature = 10.0

[[ensemble]]
name = "submit1"
members = ["base", "k2t 2"]
"#;

    #[test]
    fn parses_sample() {
        let c = RunConfig::parse(SAMPLE, Path::new("/runs")).unwrap();
        assert_eq!(c.dataset, PathBuf::from("/runs/data/trial.tsv"));
        assert_eq!(c.split, "trial");
        assert_eq!(c.out, PathBuf::from("/runs/out"));
        assert_eq!(c.formats, vec![Format::Json, Format::Markdown]);
        assert_eq!(c.systems.len(), 3);
        assert_eq!(c.systems[0].logit_scale, 100.0);
        assert_eq!(
            c.systems[2].query,
            QuerySource::SdSamples { tag: "sd".into(), metric: SampleMetric::MinL2 }
        );
        assert_eq!(c.systems[2].l2_temperature, 10.0);
        assert_eq!(c.ensemble("submit1").unwrap().weights, vec![0.5, 0.5]);
        assert!(!c.spaces["inception-feat"].normalized);
    }

    #[test]
    fn rejects_bad_references() {
        let unknown_member = SAMPLE.replace(r#"members = ["base", "k2t 2"]"#, r#"members = ["base", "zh"]"#);
        assert!(RunConfig::parse(&unknown_member, Path::new(".")).is_err());
        let unknown_tag = SAMPLE.replace(r#"tag = "k2t-2""#, r#"tag = "k2t-9""#);
        assert!(RunConfig::parse(&unknown_tag, Path::new(".")).is_err());
        let wrong_kind = SAMPLE.replace(r#"tag = "sd""#, r#"tag = "k2t-2""#);
        assert!(RunConfig::parse(&wrong_kind, Path::new(".")).is_err());
        let dup = format!("{SAMPLE}\n[[ensemble]]\nname = \"base\"\nmembers = [\"base\"]\n");
        assert!(RunConfig::parse(&dup, Path::new(".")).is_err());
        let missing_tag = SAMPLE.replace("query = \"context\"\ntag = \"k2t-2\"", "query = \"context\"");
        assert!(RunConfig::parse(&missing_tag, Path::new(".")).is_err());
        let bad_scale = SAMPLE.replace("l2_temperature = 10.0", "l2_temperature = 0.0");
        assert!(RunConfig::parse(&bad_scale, Path::new(".")).is_err());
    }
}
