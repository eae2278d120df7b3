//! Line-delimited JSON interchange format for embedding stores.
//!
//! One object per line:
//! `{"space": s, "dim": d, "kind": "text"|"image", "key": k, "vec": [...]}`
//! with an optional `"normalized": bool` (default `true`) that must agree
//! across all lines of a space.

use serde::{Deserialize, Serialize};

use super::store::{EmbeddingSpace, EmbeddingStore, Kind};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct Line {
    space: String,
    dim: usize,
    #[serde(default = "default_normalized")]
    normalized: bool,
    kind: Kind,
    key: String,
    vec: Vec<f64>,
}

fn default_normalized() -> bool {
    true
}

pub fn load(text: &str) -> Result<EmbeddingStore> {
    let mut store = EmbeddingStore::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fail = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        let line: Line = serde_json::from_str(raw).map_err(|e| fail(e.to_string()))?;
        if line.vec.len() != line.dim {
            return Err(fail(format!(
                "declared dim {} but vec has {} components",
                line.dim,
                line.vec.len()
            )));
        }
        let space = EmbeddingSpace::new(line.space.clone(), line.dim, line.normalized)
            .map_err(|e| fail(e.to_string()))?;
        store.add_space(space).map_err(|e| fail(e.to_string()))?;
        let vector = line.vec.iter().map(|&x| x as f32).collect();
        store
            .insert_normalizing(&line.space, line.kind, &line.key, vector)
            .map_err(|e| fail(e.to_string()))?;
    }
    Ok(store)
}

/// Writes every entry, space by space, in store order. Components use the
/// shortest decimal that parses back to the same `f32`.
pub fn save(store: &EmbeddingStore) -> Result<String> {
    let mut out = String::new();
    for space in store.spaces() {
        for e in store.entries(&space.name) {
            let line = LineRef {
                space: &space.name,
                dim: space.dim,
                normalized: space.normalized,
                kind: e.kind,
                key: &e.key,
                vec: &e.vector,
            };
            out.push_str(&serde_json::to_string(&line)?);
            out.push('\n');
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct LineRef<'a> {
    space: &'a str,
    dim: usize,
    normalized: bool,
    kind: Kind,
    key: &'a str,
    vec: &'a [f32],
}
