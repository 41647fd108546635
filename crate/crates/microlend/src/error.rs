use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller violated an operation's contract (bad argument, inconsistent
    /// action/outcome pair, index out of range, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Invalid configuration: bad pool spec, unknown key, impossible
    /// parameter combination.
    #[error("configuration error: {0}")]
    Config(String),

    /// A stored record is internally inconsistent (e.g. probability zero for
    /// the action it claims was sampled).
    #[error("data integrity error: {0}")]
    DataIntegrity(String),

    /// A fit could not be performed on the given data.
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    /// Structured parse error pointing at the offending row/column.
    #[error("parse error in {path} (row {row}, column {column}): {message}")]
    Parse {
        path: String,
        row: usize,
        column: String,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
