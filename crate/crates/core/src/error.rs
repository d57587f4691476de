use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point kind does not match system kind: expected {expected}, got {got}")]
    KindMismatch { expected: String, got: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature failed near the singular set: {0}")]
    Quadrature(String),

    #[error("root-find failed: {0}")]
    RootFind(String),

    #[error("divergent expectation: {0}")]
    DivergentExpectation(String),

    #[error("subshift construction infeasible: {reason}; achievable measured band [{lo:.4}, {hi:.4}]")]
    SubshiftInfeasible { reason: String, lo: f64, hi: f64 },

    #[error("no avoiding subshift among targets: {0}")]
    AvoidanceExhausted(String),

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
