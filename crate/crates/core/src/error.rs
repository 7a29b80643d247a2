use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the simulator and its tooling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty sample: statistics need at least one value")]
    EmptySample,

    /// A generator or migration produced a state that violates a schema
    /// invariant. Always a bug.
    #[error("internal consistency fault: {0}")]
    Consistency(String),

    #[error("run {run_index} ({strategy}) failed: {source}")]
    Run {
        run_index: usize,
        strategy: String,
        #[source]
        source: Box<Error>,
    },

    #[error("config parse error at line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    #[error("missing artifact: {}", .0.display())]
    MissingArtifact(PathBuf),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
