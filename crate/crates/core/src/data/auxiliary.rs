use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

/// What an auxiliary file carries per instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AuxKind {
    /// One query sentence (context completion, translation, round trip).
    Text,
    /// An ordered list of generated sample image keys.
    Samples,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AuxRow {
    Text(String),
    Samples(Vec<String>),
}

/// Per-instance query material produced outside the engine.
///
/// Both variants are two-column TSV, `instance_id \t value`. Sample files
/// repeat the id once per sample and keep row order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuxQueryFile {
    pub tag: String,
    pub kind: AuxKind,
    pub rows: BTreeMap<String, AuxRow>,
}

impl AuxQueryFile {
    pub fn parse(tag: &str, kind: AuxKind, tsv: &str, dataset: &Dataset) -> Result<Self> {
        let fail = |line: usize, message: String| Error::Aux {
            tag: tag.to_string(),
            message: format!("line {line}: {message}"),
        };
        let mut rows = BTreeMap::new();
        for (idx, raw) in tsv.split('\n').enumerate() {
            let line_no = idx + 1;
            let line = raw.strip_suffix('\r').unwrap_or(raw);
            if line.trim().is_empty() {
                continue;
            }
            let (id, value) = line
                .split_once('\t')
                .ok_or_else(|| fail(line_no, "expected `instance_id<TAB>value`".into()))?;
            let id = id.trim();
            let value = value.trim();
            if dataset.get(id).is_none() {
                return Err(fail(line_no, format!("unknown instance id {id:?}")));
            }
            if value.is_empty() {
                return Err(fail(line_no, format!("empty value for instance {id}")));
            }
            match kind {
                AuxKind::Text => {
                    if rows
                        .insert(id.to_string(), AuxRow::Text(value.to_string()))
                        .is_some()
                    {
                        return Err(fail(line_no, format!("duplicate row for instance {id}")));
                    }
                }
                AuxKind::Samples => {
                    let entry = rows
                        .entry(id.to_string())
                        .or_insert_with(|| AuxRow::Samples(Vec::new()));
                    if let AuxRow::Samples(keys) = entry {
                        keys.push(value.to_string());
                    }
                }
            }
        }
        Ok(AuxQueryFile {
            tag: tag.to_string(),
            kind,
            rows,
        })
    }

    pub fn text(&self, instance: &str) -> Option<&str> {
        match self.rows.get(instance)? {
            AuxRow::Text(t) => Some(t),
            AuxRow::Samples(_) => None,
        }
    }

    pub fn samples(&self, instance: &str) -> Option<&[String]> {
        match self.rows.get(instance)? {
            AuxRow::Samples(s) => Some(s),
            AuxRow::Text(_) => None,
        }
    }

    /// Serializes back to TSV, rows ordered by instance id.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (id, row) in &self.rows {
            match row {
                AuxRow::Text(t) => out.push_str(&format!("{id}\t{t}\n")),
                AuxRow::Samples(keys) => {
                    for k in keys {
                        out.push_str(&format!("{id}\t{k}\n"));
                    }
                }
            }
        }
        out
    }
}
