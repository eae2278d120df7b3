//! Client for the `/embed` service that produces embedding-store entries.
//!
//! The engine itself never runs a model. This crate asks a remote service
//! for exactly the vectors a run is missing and merges them into a store.

mod client;
mod error;
mod populate;
pub mod protocol;
pub mod stub;

pub use client::{EmbedClient, RetryPolicy};
pub use error::ClientError;
pub use populate::{plan_batches, populate_store, PopulateOptions, PopulateStats};
pub use protocol::{EmbedItem, EmbedRequest, EmbedResponse, EmbedVector, MAX_BATCH};
