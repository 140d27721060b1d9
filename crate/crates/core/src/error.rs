//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the decomposition toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// An input value violated a documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The polarizer-angle combinations do not span the five unknowns.
    #[error("degenerate angle set: rank {rank} < 5")]
    DegenerateAngleSet { rank: usize },

    /// Images or buffers disagree in size.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A portable-float-map file could not be parsed.
    #[error("malformed PFM: {0}")]
    MalformedPfm(String),

    /// A capture manifest is structurally or semantically invalid.
    #[error("invalid manifest: {0}")]
    Manifest(String),

    /// The scene recipe name is not recognized.
    #[error("unknown recipe: {0}")]
    UnknownRecipe(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
