use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("massless leg {leg} has zero spatial momentum (excluded point)")]
    ZeroMomentumMassless { leg: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("sign split k={k} has no balanced configurations for n={n}")]
    DegenerateSignSplit { n: usize, k: usize },

    #[error("energy split cannot be balanced: {0}")]
    InfeasibleEnergySplit(String),

    #[error("offset {index} violates the length-preserving constraint by {violation:e}")]
    ConstraintViolation { index: usize, violation: f64 },

    #[error("offsets have zero radius; the local coefficient is undefined")]
    ZeroRadius,

    #[error("constraint sampling failed: {0}")]
    InfeasibleSampling(String),

    #[error("schema error: {0}")]
    Schema(String),
}
