use thiserror::Error;

/// Errors raised by the constructions and their input validation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("non-finite matrix entry")]
    NonFinite,

    #[error("vectors are not orthogonal (worst overlap {residual:e})")]
    NotOrthogonal { residual: f64 },

    #[error("basis is not orthonormal (Gram residual {residual:e})")]
    NotOrthonormal { residual: f64 },

    #[error("vector {index} is linearly dependent on the preceding ones")]
    RankDeficient { index: usize },

    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("invalid density operator: {0}")]
    InvalidState(String),

    #[error("dimA must be 2 (got {0})")]
    QubitRequired(usize),

    #[error("{what} must be {expected} (got {found})")]
    WrongDimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{0} out of range")]
    OutOfRange(String),

    #[error("component form check failed (worst overlap {residual:e})")]
    FormCheckFailed { residual: f64 },

    #[error("matrix trace {trace:e} is not zero")]
    NonzeroTrace { trace: f64 },

    #[error("fixed diagonal entry {index} is not zero ({value:e})")]
    NonzeroFixedEntry { index: usize, value: f64 },

    #[error("product state is not in the subspace (projection residual {residual:e})")]
    NotInSubspace { residual: f64 },

    #[error("no product state found after {attempts} starts (heuristic exhausted)")]
    WitnessNotFound { attempts: usize },

    #[error("Kraus operators are not trace preserving (completeness residual {residual:e})")]
    IncompleteKraus { residual: f64 },

    #[error("protocol label {label} has no matching state")]
    UnknownLabel { label: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
