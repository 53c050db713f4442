use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    /// A rank-one update produced a non-finite entry.
    #[error("non-finite value produced by rank-one update")]
    NonFinite,
    #[error("numeric failure at step {step}")]
    NumericFailure { step: u64 },
    #[error("matrix is not positive definite (pivot {pivot})")]
    SingularMatrix { pivot: usize },
    #[error("ground truth required but missing: {0}")]
    MissingTruth(&'static str),
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
    #[error("classification target must be -1 or +1, got {0}")]
    InvalidLabel(f64),
    #[error("corrupted model snapshot: {0}")]
    CorruptSnapshot(&'static str),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: &'static str) -> Self {
        Error::InvalidParameter { name, reason }
    }
}
