//! Configuration loading, validation and experiment execution for the
//! `qrbsde` command-line tool.
//!
//! A run reads one JSON configuration, applies command-line overrides,
//! validates every field before any work starts, runs the selected
//! experiment and writes its artifacts plus a `manifest.json` into the
//! output directory.

pub mod config;
pub mod run;

pub use config::{Experiment, Overrides, RunConfig, Validated, SCHEMA_VERSION};
pub use run::{run, run_validated, Outcome};

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("experiment failed: {0}")]
    Solver(#[from] qrbsde_core::Error),

    #[error("cannot write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// 2 for configuration errors, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            _ => 1,
        }
    }
}
