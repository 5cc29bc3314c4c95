//! Experiment files, runs, output files and reports.

use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::scenarios::ScenarioError;

mod config;
mod output;
mod registry;
mod report;
mod runner;

pub use config::{load_config, parse_config, ExperimentConfig, SweepSpec};
pub use output::{
    file_sha256, summary_record, EVENTS_FILE, EVENTS_HEADER, MANIFEST_FILE, SUMMARY_FILE, SWEEP_FILE, TRACE_FILE,
    TRACE_HEADER,
};
pub use registry::{list_scenarios, RegistryEntry};
pub use report::{read_report, PressureSummary, RunReport};
pub use runner::{default_output_dir, run_experiment, RunManifest, RunOptions, SweepFile};

/// A config that could not be read, parsed or validated.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("invalid JSON at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{path}: {message}")]
    Invariant { path: String, message: String },
}

impl ConfigError {
    pub fn invariant(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Invariant {
            path: path.into(),
            message: message.into(),
        }
    }

    /// The offending key path, when there is one.
    pub fn path(&self) -> Option<&str> {
        match self {
            Self::Schema { path, .. } | Self::Invariant { path, .. } => Some(path),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("replicate {replicate}: {source}")]
    Scenario {
        replicate: u64,
        #[source]
        source: ScenarioError,
    },
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("{}: {message}", path.display())]
    Corrupt { path: PathBuf, message: String },
    #[error("checksum mismatch for {file}: manifest {expected}, file {actual}")]
    Checksum {
        file: String,
        expected: String,
        actual: String,
    },
    #[error("thread pool: {0}")]
    Pool(String),
}

impl HarnessError {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> Self {
        let path = path.into();
        move |source| Self::Io { path, source }
    }

    /// Process exit status: 2 for config errors, 3 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            _ => 3,
        }
    }
}
