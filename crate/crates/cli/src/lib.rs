//! `vwsd` command-line runner.
//!
//! Every verb reads one TOML run configuration (see [`config`]) and writes
//! its results under the configured output directory. Exit codes: 0 on
//! success, 2 for configuration, validation or data errors, 3 when the
//! embedding service cannot be reached.

pub mod commands;
pub mod config;
pub mod render;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use config::{Format, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Transport(String),
    #[error("{count} validation finding(s)")]
    Invalid { count: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Transport(_) => 3,
            _ => 2,
        }
    }
}

impl From<vwsd_core::Error> for CliError {
    fn from(e: vwsd_core::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<vwsd_client::ClientError> for CliError {
    fn from(e: vwsd_client::ClientError) -> Self {
        if e.is_transport() {
            CliError::Transport(e.to_string())
        } else {
            CliError::Data(e.to_string())
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "vwsd", version, about = "Zero-shot visual word sense disambiguation runner")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Run configuration file.
    #[arg(long, global = true, default_value = "vwsd.toml")]
    pub config: PathBuf,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Report format; repeatable (overrides the config).
    #[arg(long = "format", global = true)]
    pub formats: Vec<Format>,
    /// Worker threads for scoring.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check dataset, gold, stores, aux files and store coverage.
    Validate,
    /// Score one system and write `<out>/<system>.scores.json`.
    Score { system: String },
    /// Combine member systems and write `<out>/<ensemble>.scores.json`.
    Ensemble { ensemble: String },
    /// Hit rate and MRR for score files or configured system names (all
    /// systems and ensembles when none are given).
    Eval { tables: Vec<String> },
    /// 2x2 correctness comparison of two systems.
    Compare { a: String, b: String },
    /// Mean-similarity and round-trip analyses.
    Analyze {
        /// Text-query system (name or score file); repeatable.
        #[arg(long = "mean-sim")]
        mean_sim: Vec<String>,
        /// Run the round-trip analysis from the config's [roundtrip] table.
        #[arg(long)]
        roundtrip: bool,
    },
    /// Fetch missing embeddings from the service (VWSD_ENDPOINT overrides
    /// the configured endpoint) and write the merged store.
    Fetch {
        /// Destination for the merged binary store.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match commands::dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
