use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("shape mismatch: {left} vs {right}")]
    ShapeMismatch { left: String, right: String },

    #[error("negative entry {value} at {position}")]
    Negative { position: String, value: String },

    #[error("{what} exceeds one ({value}) at {position}")]
    ExceedsOne { what: &'static str, position: String, value: String },

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("not a bijection: {0}")]
    NotBijective(String),

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("invalid label: {0}")]
    InvalidLabel(String),

    #[error("map is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("invalid latent instance: {0}")]
    InvalidInstance(String),

    #[error("invalid json: {0}")]
    Json(String),

    #[error(transparent)]
    Dsl(#[from] crate::dsl::Diagnostics),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
