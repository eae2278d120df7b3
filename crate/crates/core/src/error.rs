use thiserror::Error;

use crate::data::Kind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: expected 12 tab-separated fields, found {found}")]
    FieldCount { line: usize, found: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("instance {instance}: {message}")]
    Validation { instance: String, message: String },

    #[error("gold file has {found} labels but the dataset has {expected} instances")]
    GoldCount { expected: usize, found: usize },

    #[error("instance {instance}: gold image {gold:?} is not one of its candidates")]
    GoldNotCandidate { instance: String, gold: String },

    #[error("aux file {tag:?}: {message}")]
    Aux { tag: String, message: String },

    #[error("store: {0}")]
    Store(String),

    #[error("store codec: {message} at byte offset {offset}")]
    Codec { offset: usize, message: String },

    #[error("missing {kind} key {key:?} in space {space:?} (instance {instance})")]
    MissingKey {
        space: String,
        kind: Kind,
        key: String,
        instance: String,
    },

    #[error("system {system:?}: no {tag:?} row for instance {instance}")]
    MissingAuxRow {
        system: String,
        tag: String,
        instance: String,
    },

    #[error("system {system:?}: {message}")]
    System { system: String, message: String },

    #[error("{0}")]
    Domain(String),

    #[error("tables are misaligned at instance {instance}: {message}")]
    Misaligned { instance: String, message: String },

    #[error("ensemble {name:?}: {message}")]
    Ensemble { name: String, message: String },

    #[error("instance {0} has no gold label")]
    MissingGold(String),

    #[error("{0}")]
    Metric(String),

    #[error("instance {instance}: {source}")]
    Instance {
        instance: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
