use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("gamma must lie in [0, 1), got {0}")]
    GammaOutOfRange(f64),

    #[error("exponent a = {a} outside the admissible interval ({lo}, 1)")]
    ExponentOutOfRange { a: f64, lo: f64 },

    #[error("non-finite state on path {path} at step {step}; dt is probably too large")]
    NonFinite { path: u64, step: usize },

    #[error("sampled function is negative at grid index {0}")]
    NegativeSample(usize),

    #[error("empty grid")]
    EmptyGrid,

    #[error("operation only defined for gamma = 0, got {0}")]
    RequiresGammaZero(f64),

    #[error("operation only defined for gamma > 0")]
    RequiresGammaPositive,

    #[error("path and parameters disagree: {0}")]
    Mismatch(String),

    #[error("{aborted} of {total} paths aborted (limit 0.1%)")]
    TooManyAborts { aborted: usize, total: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
