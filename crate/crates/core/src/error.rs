//! Error type shared across the crate.

/// Errors produced by map construction, geometry, solvers, and file I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Two maps that must share a shape do not.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    /// An argument violates a precondition (bad sizes, empty inputs, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A value lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The normal equations are singular or near-singular.
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    /// Not enough valid data to run an estimator.
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    /// A file does not match its expected format.
    #[error("format error: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for CLI reporting: 2 for data/format problems,
    /// 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DegenerateGeometry(_) | Error::Domain(_) | Error::InsufficientData(_) => 3,
            _ => 2,
        }
    }
}
