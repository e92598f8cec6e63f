use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("ingestion error at data row {row}: {message}")]
    Ingest { row: usize, message: String },

    #[error("LETOR parse error at line {line}: {message}")]
    Letor { line: usize, message: String },

    #[error("invalid dataset: {0}")]
    Dataset(String),

    #[error("dimension mismatch: expected {expected} attributes, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("invalid ranking: {0}")]
    InvalidRanking(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("model format error: {0}")]
    ModelFormat(String),

    #[error("explanation failed: {0}")]
    Explain(String),

    #[error("artifact not found: {0}")]
    NotFound(String),

    #[error("invalid artifact key: {0}")]
    InvalidKey(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
