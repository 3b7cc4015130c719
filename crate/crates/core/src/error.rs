//! Crate-wide error type.

use thiserror::Error;

/// Everything that can go wrong across the sampling pipeline.
///
/// Kept `Clone` so lazily built (and cached) preprocessing results can hand
/// the same failure back to every caller.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Enumeration would visit more subsets than the configured cap.
    #[error("support enumeration needs {needed} subsets, above the cap of {cap}")]
    CapExceeded { needed: u128, cap: u128 },

    /// Every weight in the (restricted) distribution is zero.
    #[error("distribution has zero total mass")]
    ZeroMass,

    /// Two distributions or vectors live on different ground sets.
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    /// Matrix is not symmetric within tolerance.
    #[error("matrix is not symmetric: max deviation {max_dev:e} exceeds {tol:e}")]
    NotSymmetric { max_dev: f64, tol: f64 },

    /// An eigenvalue is more negative than the PSD tolerance allows.
    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:e} below -{tol:e}")]
    NotPsd { eigenvalue: f64, tol: f64 },

    /// Kernel rank is too small to support k-subsets.
    #[error("kernel rank {rank} is below the requested cardinality k={k}")]
    InfeasibleK { rank: usize, k: usize },

    /// Graph (or restricted subgraph) does not connect all vertices.
    #[error("graph is not connected")]
    Disconnected,

    /// The model's support is empty.
    #[error("empty support")]
    EmptySupport,

    /// A subdivided sample contained two copies of one original element.
    #[error("duplicate copies of original element {original} in one sample")]
    DuplicateOriginal { original: usize },

    /// Input file could not be parsed; line numbers are 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Edge weight must be strictly positive.
    #[error("nonpositive edge weight at line {line}")]
    NonpositiveWeight { line: usize },

    /// Anything the OS refused to do.
    #[error("io error: {0}")]
    Io(String),

    /// Catch-all for invalid arguments at the API boundary.
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
