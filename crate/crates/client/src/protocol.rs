//! JSON bodies of `POST {endpoint}/embed`.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use vwsd_core::Kind;

use crate::error::ClientError;

/// Largest number of items one request may carry.
pub const MAX_BATCH: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbedItem {
    pub key: String,
    /// Raw text for text items; a path, URL or base64 image for image items.
    pub payload: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub space: String,
    pub kind: Kind,
    pub items: Vec<EmbedItem>,
}

impl EmbedRequest {
    pub fn validate(&self) -> Result<(), ClientError> {
        if self.items.len() > MAX_BATCH {
            return Err(ClientError::InvalidRequest(format!(
                "{} items exceeds the limit of {MAX_BATCH}",
                self.items.len()
            )));
        }
        let mut keys = HashSet::with_capacity(self.items.len());
        for item in &self.items {
            if !keys.insert(item.key.as_str()) {
                return Err(ClientError::InvalidRequest(format!("duplicate key {:?}", item.key)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedVector {
    pub key: String,
    pub vec: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub space: String,
    pub dim: usize,
    pub vectors: Vec<EmbedVector>,
}

impl EmbedResponse {
    /// Checks the response against its request: same space, one vector of
    /// `dim` components per requested key and nothing else.
    pub fn check(&self, request: &EmbedRequest) -> Result<(), ClientError> {
        if self.space != request.space {
            return Err(ClientError::Protocol(format!(
                "asked for space {:?}, server answered for {:?}",
                request.space, self.space
            )));
        }
        let requested: HashSet<&str> = request.items.iter().map(|i| i.key.as_str()).collect();
        let mut seen = HashSet::with_capacity(self.vectors.len());
        for v in &self.vectors {
            if !requested.contains(v.key.as_str()) {
                return Err(ClientError::Protocol(format!("unrequested key {:?} in response", v.key)));
            }
            if !seen.insert(v.key.as_str()) {
                return Err(ClientError::Protocol(format!("key {:?} returned twice", v.key)));
            }
            if v.vec.len() != self.dim {
                return Err(ClientError::Protocol(format!(
                    "key {:?} has {} components, response dim is {}",
                    v.key,
                    v.vec.len(),
                    self.dim
                )));
            }
        }
        let missing: Vec<String> = request
            .items
            .iter()
            .filter(|i| !seen.contains(i.key.as_str()))
            .map(|i| i.key.clone())
            .collect();
        if !missing.is_empty() {
            return Err(ClientError::PartialFailure { missing });
        }
        Ok(())
    }
}
