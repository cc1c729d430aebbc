use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by dataset I/O, matrix builders, and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed file content; `line` is 1-based.
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A matrix was too ill-conditioned for the requested factorization.
    #[error("conditioning failure: {0}")]
    Conditioning(String),
}

pub type Result<T> = std::result::Result<T, Error>;
