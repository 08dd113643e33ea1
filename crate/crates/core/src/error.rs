use thiserror::Error;

/// Errors raised by field, operator, spectral and resolvent routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {left:?} vs {right:?}")]
    GridMismatch { left: [usize; 3], right: [usize; 3] },

    #[error("operation `{op}` is not defined for a {rank} input")]
    RankMismatch { op: &'static str, rank: &'static str },

    #[error("{what} must be strictly positive (min sample {min:e}, floor {floor:e})")]
    NonPositive { what: String, min: f64, floor: f64 },

    #[error("{solver} did not converge after {iterations} iterations (relative residual {residual:e})")]
    NotConverged {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("operator {0} needs a spectral parameter")]
    MissingSpectralParameter(&'static str),

    #[error("operator {0} does not take a spectral parameter")]
    UnexpectedSpectralParameter(&'static str),

    #[error("bandlimit {bandlimit} exceeds the admissible {max} for this grid")]
    BandlimitTooLarge { bandlimit: usize, max: usize },

    #[error("extension constraint violated: {0}")]
    ConstraintViolation(String),

    #[error("matrix dimension {size} exceeds the memory cap {cap}")]
    MemoryCap { size: usize, cap: usize },

    #[error("free multiplier is singular at mode {mode:?} (|denominator| = {value:e})")]
    SingularMultiplier { mode: [i64; 3], value: f64 },

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("dense linear algebra failed: {0}")]
    LinearAlgebra(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
