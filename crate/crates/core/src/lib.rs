//! Zero-shot visual word sense disambiguation.
//!
//! Each instance pairs an ambiguous target word and a short context phrase
//! with ten candidate images. Systems score candidates against precomputed
//! embeddings (phrase text, generated context, translations, or generated
//! sample images), ensembles average their probabilities, and the metrics
//! module reports hit rate, MRR and the cross-system analyses.

pub mod coverage;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod metrics;
pub mod scoring;

pub use coverage::{store_coverage_check, CoverageReport, MissingEntry};
pub use data::{AuxKind, AuxQueryFile, Dataset, EmbeddingSpace, EmbeddingStore, Instance, Kind};
pub use ensemble::{ensemble_tables, EnsembleSpec};
pub use error::{Error, Result};
pub use metrics::{evaluate, MetricsReport};
pub use scoring::{score_system, QuerySource, SampleMetric, ScoreRow, ScoreTable, SystemSpec};
