use thiserror::Error;

/// Errors raised by the offline and online stages.
#[derive(Debug, Error)]
pub enum RomError {
    #[error("invalid mesh resolution {0}: elements per side must be even and at least 2")]
    InvalidResolution(usize),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("parameter component {index} must be strictly positive (got {value}) at y = {y:?}")]
    NonPositiveParameter { index: usize, value: f64, y: Vec<f64> },

    #[error("truth solver breakdown at y = {y:?}: {reason}")]
    SolverBreakdown { y: Vec<f64>, reason: String },

    #[error("eigensolver failed to converge: {0}")]
    EigenFailure(String),

    #[error("singular reduced order system at N = {n}, y = {y:?} (condition estimate {cond:e})")]
    SingularReducedSystem { n: usize, y: Vec<f64>, cond: f64 },

    #[error("reduced basis is empty")]
    EmptyBasis,

    #[error("basis is not X-orthonormal (max deviation {0:e})")]
    NotOrthonormal(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("archive format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, RomError>;
