use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input value violates a documented range or structural invariant.
    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },

    /// A mathematical precondition does not hold (non-positive distance, coincident points, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Not enough usable data for the requested computation.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("line {line}: {reason}")]
    Parse { line: u64, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
