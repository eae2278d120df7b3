use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of candidate images per instance.
pub const CANDIDATES: usize = 10;

const FIELDS: usize = CANDIDATES + 2;

/// One disambiguation problem: a target word, the phrase that fixes its
/// sense, and ten candidate image keys.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub id: String,
    pub target_word: String,
    pub full_phrase: String,
    pub candidates: Vec<String>,
    pub gold: Option<String>,
}

impl Instance {
    pub fn new(
        id: impl Into<String>,
        target_word: impl Into<String>,
        full_phrase: impl Into<String>,
        candidates: Vec<String>,
    ) -> Result<Self> {
        let instance = Instance {
            id: id.into(),
            target_word: target_word.into(),
            full_phrase: full_phrase.into(),
            candidates,
            gold: None,
        };
        instance.validate()?;
        Ok(instance)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |message: String| Error::Validation {
            instance: self.id.clone(),
            message,
        };
        if self.target_word.is_empty() {
            return Err(fail("target word is empty".into()));
        }
        if self.full_phrase.is_empty() {
            return Err(fail("full phrase is empty".into()));
        }
        if self.candidates.len() != CANDIDATES {
            return Err(fail(format!(
                "expected {CANDIDATES} candidates, found {}",
                self.candidates.len()
            )));
        }
        let mut seen = HashSet::with_capacity(CANDIDATES);
        for key in &self.candidates {
            if key.is_empty() {
                return Err(fail("empty candidate key".into()));
            }
            if !seen.insert(key.as_str()) {
                return Err(fail(format!("duplicate candidate {key:?}")));
            }
        }
        if let Some(gold) = &self.gold {
            if !self.candidates.contains(gold) {
                return Err(Error::GoldNotCandidate {
                    instance: self.id.clone(),
                    gold: gold.clone(),
                });
            }
        }
        Ok(())
    }

    /// Position of `key` among the candidates.
    pub fn candidate_index(&self, key: &str) -> Option<usize> {
        self.candidates.iter().position(|c| c == key)
    }

    pub fn gold_index(&self) -> Option<usize> {
        self.gold.as_deref().and_then(|g| self.candidate_index(g))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub split_name: String,
    pub instances: Vec<Instance>,
}

/// Zero-padded 1-based ordinal used as the instance id.
pub fn instance_id(ordinal: usize) -> String {
    format!("{ordinal:06}")
}

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.split('\n')
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.trim().is_empty())
}

impl Dataset {
    pub fn new(split_name: impl Into<String>, instances: Vec<Instance>) -> Result<Self> {
        let dataset = Dataset {
            split_name: split_name.into(),
            instances,
        };
        dataset.validate()?;
        Ok(dataset)
    }

    /// Parses the 12-column task TSV: word, phrase, then ten image keys.
    ///
    /// Blank lines are skipped. Ids number the instances, not the physical
    /// lines, so a trailing newline or a blank separator does not shift them.
    pub fn parse(tsv: &str, split_name: &str) -> Result<Self> {
        let mut instances = Vec::new();
        for (line_no, line) in lines(tsv) {
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            if fields.len() != FIELDS {
                return Err(Error::FieldCount {
                    line: line_no,
                    found: fields.len(),
                });
            }
            let instance = Instance {
                id: instance_id(instances.len() + 1),
                target_word: fields[0].to_string(),
                full_phrase: fields[1].to_string(),
                candidates: fields[2..].iter().map(|s| s.to_string()).collect(),
                gold: None,
            };
            instance.validate().map_err(|e| match e {
                Error::Validation { instance, message } => Error::Validation {
                    instance,
                    message: format!("line {line_no}: {message}"),
                },
                other => other,
            })?;
            instances.push(instance);
        }
        Ok(Dataset {
            split_name: split_name.to_string(),
            instances,
        })
    }

    /// Inverse of [`Dataset::parse`]; gold labels are not part of the TSV.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for inst in &self.instances {
            out.push_str(&inst.target_word);
            out.push('\t');
            out.push_str(&inst.full_phrase);
            for c in &inst.candidates {
                out.push('\t');
                out.push_str(c);
            }
            out.push('\n');
        }
        out
    }

    /// Attaches one gold key per instance, in dataset order.
    pub fn with_gold(&self, gold_text: &str) -> Result<Self> {
        let labels: Vec<&str> = lines(gold_text).map(|(_, l)| l.trim()).collect();
        if labels.len() != self.instances.len() {
            return Err(Error::GoldCount {
                expected: self.instances.len(),
                found: labels.len(),
            });
        }
        let mut out = self.clone();
        for (inst, label) in out.instances.iter_mut().zip(labels) {
            if !inst.candidates.iter().any(|c| c == label) {
                return Err(Error::GoldNotCandidate {
                    instance: inst.id.clone(),
                    gold: label.to_string(),
                });
            }
            inst.gold = Some(label.to_string());
        }
        Ok(out)
    }

    pub fn gold_tsv(&self) -> Result<String> {
        let mut out = String::new();
        for inst in &self.instances {
            let gold = inst
                .gold
                .as_deref()
                .ok_or_else(|| Error::MissingGold(inst.id.clone()))?;
            out.push_str(gold);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids = HashSet::with_capacity(self.instances.len());
        for inst in &self.instances {
            inst.validate()?;
            if !ids.insert(inst.id.as_str()) {
                return Err(Error::Validation {
                    instance: inst.id.clone(),
                    message: "duplicate instance id".into(),
                });
            }
        }
        Ok(())
    }

    /// Non-fatal findings: instances whose phrase does not contain the
    /// target word (case-insensitive).
    pub fn warnings(&self) -> Vec<String> {
        self.instances
            .iter()
            .filter(|i| {
                !i.full_phrase
                    .to_lowercase()
                    .contains(&i.target_word.to_lowercase())
            })
            .map(|i| {
                format!(
                    "instance {}: target word {:?} does not occur in phrase {:?}",
                    i.id, i.target_word, i.full_phrase
                )
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Instance> {
        self.instances.iter().find(|i| i.id == id)
    }

    pub fn is_labeled(&self) -> bool {
        self.instances.iter().all(|i| i.gold.is_some())
    }
}
