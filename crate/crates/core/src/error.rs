use alloc::string::String;

/// Errors raised by the simulation core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unsupported cell count {0}")]
    UnsupportedCellCount(usize),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:e}, max eigenvalue {max_eig:e})")]
    NotPsd { min_eig: f64, max_eig: f64 },

    #[error("{what} is numerically singular (condition number {cond:e})")]
    Singular { what: &'static str, cond: f64 },

    #[error("need at least {needed} trials, got {got}")]
    InsufficientTrials { needed: usize, got: usize },

    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
