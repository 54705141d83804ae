use std::path::PathBuf;

use binquest_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(#[source] CoreError),

    #[error("{path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) | CliError::Write { .. } => 3,
            CliError::Invariant(_) => 4,
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Config(m) | CliError::Invariant(m) => m.clone(),
            other => other.to_string(),
        }
    }
}

/// Parameter problems are configuration errors; everything else the core
/// reports comes from the data.
impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        match err {
            CoreError::InvalidClusterConfig(_)
            | CoreError::InvalidAlpha(_)
            | CoreError::InvalidQuantile(_)
            | CoreError::InvalidSpec(_)
            | CoreError::TooManyClusters { .. }
            | CoreError::OverrideNotInCluster { .. } => CliError::Config(err.to_string()),
            other => CliError::Data(other),
        }
    }
}
