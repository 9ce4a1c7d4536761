use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid base matrix: {0}")]
    InvalidBaseMatrix(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("cannot place {multiplicity} disjoint permutations in a {lifting}x{lifting} block")]
    LiftingInfeasible { multiplicity: u32, lifting: usize },

    #[error("non-finite channel LLR at position {0}")]
    NonFiniteLlr(usize),

    #[error("no threshold bracket found in [{lo_db}, {hi_db}] dB")]
    BracketNotFound { lo_db: f64, hi_db: f64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
