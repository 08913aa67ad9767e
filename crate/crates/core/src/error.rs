use thiserror::Error;

/// Errors raised by the solver stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("grid mismatch: field has {field} values, grid has {grid} nodes")]
    GridMismatch { field: usize, grid: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("inconsistent exponent ledger: {0}")]
    Inconsistent(String),

    #[error("cache corrupted: {0}")]
    CacheCorrupt(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Numerical,
    Io,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidParams(_)
            | Error::Domain(_)
            | Error::Unsupported(_)
            | Error::NotApplicable(_)
            | Error::GridMismatch { .. } => ErrorKind::Validation,
            Error::Numerical(_) | Error::Inconsistent(_) => ErrorKind::Numerical,
            Error::CacheCorrupt(_) | Error::Io(_) | Error::Json(_) => ErrorKind::Io,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
