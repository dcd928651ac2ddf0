use thiserror::Error;

use crate::providers::ProviderError;

/// Errors raised by the count-answering engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A caller broke an operation's precondition (for example, an empty
    /// candidate multiset handed to consolidation).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("missing provider binding: {0}")]
    MissingProvider(String),

    #[error(transparent)]
    Provider(#[from] ProviderError),

    #[error("{path}:{line}: {message}")]
    Schema { path: String, line: usize, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
