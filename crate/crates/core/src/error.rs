//! Error taxonomy shared across the library.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameter combination or malformed configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Coordinate or index outside grid bounds.
    #[error("range error: {0}")]
    Range(String),

    /// Iterative solver failed to converge or bracketing failed.
    #[error("solver error: {0}")]
    Solver(String),

    /// A pipeline stage requires an artifact that has not been produced.
    #[error("missing artifact: {0}")]
    MissingArtifact(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
