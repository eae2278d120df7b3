//! Datasets, gold labels, auxiliary query files and embedding stores.

mod auxiliary;
pub mod codec;
mod dataset;
pub mod jsonl;
mod store;

pub use auxiliary::{AuxKind, AuxQueryFile, AuxRow};
pub use dataset::{instance_id, Dataset, Instance, CANDIDATES};
pub use store::{EmbeddingSpace, EmbeddingStore, Entry, Kind, NORM_TOLERANCE, RENORMALIZE_TOLERANCE};

use crate::error::{Error, Result};

impl EmbeddingStore {
    pub fn from_jsonl(text: &str) -> Result<Self> {
        jsonl::load(text)
    }

    pub fn to_jsonl(&self) -> Result<String> {
        jsonl::save(self)
    }

    pub fn from_binary(bytes: &[u8]) -> Result<Self> {
        codec::decode(bytes)
    }

    pub fn to_binary(&self) -> Result<Vec<u8>> {
        codec::encode(self)
    }

    /// Decodes either format, choosing binary when the magic is present.
    pub fn from_any(bytes: &[u8]) -> Result<Self> {
        if bytes.starts_with(codec::MAGIC) {
            codec::decode(bytes)
        } else {
            let text = std::str::from_utf8(bytes)
                .map_err(|e| Error::Store(format!("store is neither binary nor UTF-8 JSONL: {e}")))?;
            jsonl::load(text)
        }
    }
}
