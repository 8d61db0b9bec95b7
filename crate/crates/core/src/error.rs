use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("model size cap exceeded: {sites} sites (cap {cap})")]
    SizeCapExceeded { sites: usize, cap: usize },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("site index {index} out of range (model has {len} sites)")]
    SiteOutOfRange { index: usize, len: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("quadrature failed to converge: {reason} (tail estimate {tail:.3e})")]
    NonConvergence { reason: String, tail: f64 },

    #[error("argument of {0:?} lies outside the admissible sector |arg z| < pi/4")]
    OutsideSector(num_complex::Complex64),

    #[error("spectral decomposition failed: {0}")]
    Decomposition(String),

    #[error("invariant violated in {check}: {detail}")]
    InvariantViolated { check: String, detail: String },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("insufficient range for {context}: needs at least {needed} samples, admissible window gives {got}")]
    InsufficientRange {
        context: String,
        needed: usize,
        got: usize,
    },

    #[error("open set must have nonempty complement")]
    WhitneyFullSpace,

    #[error("config error at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn invalid(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    pub fn config(path: &str, reason: impl Into<String>) -> Self {
        Error::Config {
            path: path.to_string(),
            reason: reason.into(),
        }
    }
}
