//! Library side of the `lumaswitch` command: config resolution, manifests,
//! evaluation reports and the subcommand bodies.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod report;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid configuration; exit status 2.
    #[error("{0}")]
    Usage(String),
    /// Failure while running; exit status 1.
    #[error(transparent)]
    Runtime(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}
