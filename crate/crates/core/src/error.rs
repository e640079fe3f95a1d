use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("descriptor mismatch: expected {expected}, found {found}")]
    DescriptorMismatch { expected: String, found: String },

    #[error("invalid group descriptor: {0}")]
    InvalidDescriptor(String),

    #[error("invalid band: {0}")]
    InvalidBand(String),

    #[error("irrep {irrep} does not belong to {group}")]
    InvalidIrrep { irrep: String, group: String },

    #[error("invalid homomorphism: {0}")]
    InvalidHom(String),

    #[error("quadrature needs {needed} nodes, budget is {budget}")]
    Resource { needed: usize, budget: usize },

    #[error("geodesic family does not cover frequency {m:?}: no usable direction k with m.k = 0")]
    MissingDirection { m: Vec<i64> },

    #[error("unsupported group {group}: {reason}")]
    UnsupportedGroup { group: String, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
