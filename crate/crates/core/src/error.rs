use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A study record that violates its structural invariants.
    #[error("invalid study `{id}`: {reason}")]
    InvalidStudy { id: String, reason: String },

    /// A quadrature or simulation quantity collapsed numerically.
    #[error("numerical degeneracy: {0}")]
    Degenerate(String),

    /// Caller broke an API contract (misaligned inputs, bad config).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("sampler failure: {0}")]
    Sampler(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
