use thiserror::Error;

/// Errors raised by the spectral, dynamics and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("input too large for the brute-force oracle: {modes} modes (limit {limit})")]
    OracleSize { modes: usize, limit: usize },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("snapshot format error: {0}")]
    Format(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
