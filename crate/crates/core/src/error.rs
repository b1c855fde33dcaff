use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A required file or directory is missing or unreadable.
    #[error("{path}: {reason}")]
    Structure { path: PathBuf, reason: String },

    /// Data was read but violates a data-model invariant.
    #[error("validation failed for {context}: {reason}")]
    Validation { context: String, reason: String },

    /// An argument is outside the operation's domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A numerical routine could not produce a result (singular matrix, degenerate geometry).
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error in {context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("CSV error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn validation(context: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            context: context.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input data rather than bad arguments.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Validation { .. } | Error::Structure { .. } | Error::Csv { .. }
        )
    }
}
