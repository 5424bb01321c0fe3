use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Shapes or dimensions that cannot work together.
    #[error("configuration error: {0}")]
    Config(String),

    /// Caller-supplied data violates a precondition.
    #[error("input error: {0}")]
    Input(String),

    #[error("numerical domain error: {0}")]
    NumericalDomain(String),

    #[error("training diverged at epoch {epoch}, batch {batch}: {detail}")]
    Training {
        epoch: usize,
        batch: usize,
        detail: String,
    },

    /// A move or message arrived that the current game state does not accept.
    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
