use thiserror::Error;

/// Crate-wide error type.
#[derive(Error, Debug)]
pub enum Error {
    /// Invalid configuration or parameter bundle.
    #[error("configuration error: {0}")]
    Config(String),

    /// A point lies outside the domain required by the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The mesh cannot resolve the requested evaluation.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// Two grid functions live on different meshes.
    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),

    /// Non-finite intermediate or other numerical failure.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// An iterative solver ran out of budget. The best iterate norm data is
    /// carried in the message; callers that need the iterate itself use the
    /// solver-level report.
    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
