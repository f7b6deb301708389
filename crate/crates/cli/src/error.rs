use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error("{artifact} not found in {}: run {producer} first", dir.display())]
    MissingArtifact {
        artifact: String,
        dir: PathBuf,
        producer: &'static str,
    },
    #[error(transparent)]
    Runtime(#[from] anyhow::Error),
}

impl CliError {
    /// 2 for usage and configuration problems, 1 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::MissingArtifact { .. } => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Wraps any error as a runtime failure.
pub fn runtime<E: Into<anyhow::Error>>(e: E) -> CliError {
    CliError::Runtime(e.into())
}
