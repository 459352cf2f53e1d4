//! Error type shared by every module in the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Model parameters violate a structural constraint (simplex sums,
    /// dimension mismatches, non-finite entries).
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// Observation data violates its contract (empty set, symbol out of
    /// the alphabet, kind mismatch).
    #[error("invalid data: {0}")]
    InvalidData(String),

    /// Bad configuration (thresholds, counts, plan fields).
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// A position where every state assigns zero effective emission mass.
    /// `position` is the zero-based time index within `sequence`.
    #[error("numerical degeneracy in sequence {sequence} at position {position}: {detail}")]
    Degenerate {
        sequence: usize,
        position: usize,
        detail: String,
    },

    /// Exhaustive enumeration was requested on an instance too large for it.
    #[error("instance too large for enumeration: {0}")]
    TooLarge(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
