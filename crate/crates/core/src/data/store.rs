use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest accepted deviation of a stored unit vector's norm from 1.
pub const NORM_TOLERANCE: f64 = 1e-5;

/// Deviation up to which incoming vectors are silently re-normalized.
pub const RENORMALIZE_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Text,
    Image,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Text => "text",
            Kind::Image => "image",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One model/language/feature family. Vectors only compare within a space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingSpace {
    pub name: String,
    pub dim: usize,
    /// Unit-norm (cosine) space; feature-distance spaces store raw vectors.
    pub normalized: bool,
}

impl EmbeddingSpace {
    pub fn new(name: impl Into<String>, dim: usize, normalized: bool) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::Store("space name is empty".into()));
        }
        if dim == 0 {
            return Err(Error::Store(format!("space {name:?}: dim must be positive")));
        }
        Ok(EmbeddingSpace {
            name,
            dim,
            normalized,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub kind: Kind,
    pub key: String,
    pub vector: Vec<f32>,
}

#[derive(Debug, Clone)]
pub(crate) struct SpaceData {
    pub(crate) space: EmbeddingSpace,
    pub(crate) entries: Vec<Entry>,
    index: HashMap<String, [Option<usize>; 2]>,
}

impl SpaceData {
    fn new(space: EmbeddingSpace) -> Self {
        SpaceData {
            space,
            entries: Vec::new(),
            index: HashMap::new(),
        }
    }
}

fn norm(v: &[f32]) -> f64 {
    v.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>().sqrt()
}

/// Immutable-after-load map from `(space, kind, key)` to a vector.
///
/// Entry order within each space is insertion order, and spaces keep the
/// order in which they were first declared.
#[derive(Debug, Clone, Default)]
pub struct EmbeddingStore {
    spaces: Vec<SpaceData>,
    by_name: HashMap<String, usize>,
}

impl PartialEq for EmbeddingStore {
    fn eq(&self, other: &Self) -> bool {
        self.spaces.len() == other.spaces.len()
            && self
                .spaces
                .iter()
                .zip(&other.spaces)
                .all(|(a, b)| a.space == b.space && a.entries == b.entries)
    }
}

impl EmbeddingStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares a space. Re-declaring an identical space is a no-op.
    pub fn add_space(&mut self, space: EmbeddingSpace) -> Result<()> {
        if let Some(&idx) = self.by_name.get(&space.name) {
            let existing = &self.spaces[idx].space;
            if *existing != space {
                return Err(Error::Store(format!(
                    "space {:?} declared as dim {} normalized={} but already has dim {} normalized={}",
                    space.name, space.dim, space.normalized, existing.dim, existing.normalized
                )));
            }
            return Ok(());
        }
        self.by_name.insert(space.name.clone(), self.spaces.len());
        self.spaces.push(SpaceData::new(space));
        Ok(())
    }

    pub fn space(&self, name: &str) -> Option<&EmbeddingSpace> {
        self.by_name.get(name).map(|&i| &self.spaces[i].space)
    }

    pub fn spaces(&self) -> impl Iterator<Item = &EmbeddingSpace> {
        self.spaces.iter().map(|s| &s.space)
    }

    pub fn entries(&self, space: &str) -> &[Entry] {
        self.by_name
            .get(space)
            .map(|&i| self.spaces[i].entries.as_slice())
            .unwrap_or(&[])
    }

    pub(crate) fn space_data(&self) -> &[SpaceData] {
        &self.spaces
    }

    pub fn len(&self) -> usize {
        self.spaces.iter().map(|s| s.entries.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, space: &str, kind: Kind, key: &str) -> Option<&[f32]> {
        let data = &self.spaces[*self.by_name.get(space)?];
        let idx = data.index.get(key)?[kind as usize]?;
        Some(&data.entries[idx].vector)
    }

    pub fn contains(&self, space: &str, kind: Kind, key: &str) -> bool {
        self.get(space, kind, key).is_some()
    }

    /// Inserts a vector that must already satisfy the space's invariants.
    pub fn insert(&mut self, space: &str, kind: Kind, key: &str, vector: Vec<f32>) -> Result<()> {
        let data = self.checked_space(space, key, &vector)?;
        if data.space.normalized {
            let n = norm(&vector);
            if (n - 1.0).abs() > NORM_TOLERANCE {
                return Err(Error::Store(format!(
                    "{kind} key {key:?} in normalized space {space:?} has norm {n}"
                )));
            }
        }
        Self::push(data, kind, key, vector)
    }

    /// Inserts a vector from an encoder. In normalized spaces, vectors already
    /// within [`NORM_TOLERANCE`] are kept bit-for-bit, deviations up to
    /// [`RENORMALIZE_TOLERANCE`] are rescaled, and larger ones are rejected.
    pub fn insert_normalizing(
        &mut self,
        space: &str,
        kind: Kind,
        key: &str,
        mut vector: Vec<f32>,
    ) -> Result<()> {
        let data = self.checked_space(space, key, &vector)?;
        if data.space.normalized {
            let n = norm(&vector);
            if n == 0.0 {
                return Err(Error::Store(format!(
                    "{kind} key {key:?} in normalized space {space:?} is a zero vector"
                )));
            }
            if (n - 1.0).abs() > RENORMALIZE_TOLERANCE {
                return Err(Error::Store(format!(
                    "{kind} key {key:?} in normalized space {space:?} has norm {n}, beyond re-normalization tolerance"
                )));
            }
            if (n - 1.0).abs() > NORM_TOLERANCE {
                for x in &mut vector {
                    *x = (f64::from(*x) / n) as f32;
                }
            }
        }
        Self::push(data, kind, key, vector)
    }

    fn checked_space(&mut self, space: &str, key: &str, vector: &[f32]) -> Result<&mut SpaceData> {
        let idx = *self
            .by_name
            .get(space)
            .ok_or_else(|| Error::Store(format!("unknown space {space:?}")))?;
        let data = &mut self.spaces[idx];
        if vector.len() != data.space.dim {
            return Err(Error::Store(format!(
                "key {key:?}: vector has {} components but space {space:?} has dim {}",
                vector.len(),
                data.space.dim
            )));
        }
        if let Some(bad) = vector.iter().find(|x| !x.is_finite()) {
            return Err(Error::Store(format!(
                "key {key:?} in space {space:?}: non-finite component {bad}"
            )));
        }
        Ok(data)
    }

    fn push(data: &mut SpaceData, kind: Kind, key: &str, vector: Vec<f32>) -> Result<()> {
        if key.is_empty() {
            return Err(Error::Store(format!("empty key in space {:?}", data.space.name)));
        }
        let next = data.entries.len();
        let slot = &mut data.index.entry(key.to_string()).or_default()[kind as usize];
        if slot.is_some() {
            return Err(Error::Store(format!(
                "duplicate {kind} key {key:?} in space {:?}",
                data.space.name
            )));
        }
        *slot = Some(next);
        data.entries.push(Entry {
            kind,
            key: key.to_string(),
            vector,
        });
        Ok(())
    }

    /// Adds every entry of `other`. Entries present in both must be
    /// bit-identical.
    pub fn merge(&mut self, other: &EmbeddingStore) -> Result<()> {
        for data in &other.spaces {
            self.add_space(data.space.clone())?;
            for e in &data.entries {
                match self.get(&data.space.name, e.kind, &e.key) {
                    Some(v) => {
                        let same = v.len() == e.vector.len()
                            && v.iter().zip(&e.vector).all(|(a, b)| a.to_bits() == b.to_bits());
                        if !same {
                            return Err(Error::Store(format!(
                                "conflicting vectors for {} key {:?} in space {:?}",
                                e.kind, e.key, data.space.name
                            )));
                        }
                    }
                    None => self.insert(&data.space.name, e.kind, &e.key, e.vector.clone())?,
                }
            }
        }
        Ok(())
    }
}
