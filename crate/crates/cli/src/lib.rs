//! Experiment drivers and data plumbing behind the `drcert` binary.

pub mod config;
pub mod experiments;
pub mod ingest;
pub mod output;
pub mod synth;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(#[from] config::ConfigError),
    #[error("data: {0}")]
    Data(#[from] ingest::IngestError),
    #[error("numeric: {0}")]
    Numeric(String),
    #[error("output: {0}")]
    Output(#[from] output::OutputError),
}

impl CliError {
    /// Process exit status: 2 config, 3 data or output, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) | CliError::Output(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }

    pub(crate) fn numeric(err: impl std::fmt::Display) -> Self {
        CliError::Numeric(err.to_string())
    }
}
