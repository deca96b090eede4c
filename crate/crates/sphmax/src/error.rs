use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on a numeric argument was violated.
    #[error("domain error: {0}")]
    Domain(String),

    /// A deterministic rule was requested in a dimension it does not support.
    #[error("unsupported dimension {dim} for {what}")]
    UnsupportedDimension { dim: usize, what: &'static str },

    /// Two quadrature rules or vectors do not live in compatible dimensions.
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// The integrand returned a non-finite value at a quadrature node.
    #[error("non-finite integrand value {value} at node {index}")]
    Evaluation { index: usize, value: f64 },

    /// A function with a point singularity was evaluated exactly at it.
    #[error("singular evaluation at the origin of a power-log function")]
    SingularPoint,

    /// An operator or experiment configuration is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
