use thiserror::Error;

pub type Result<T> = std::result::Result<T, QmeterError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QmeterError {
    #[error("matrix is not Hermitian: max deviation {deviation:e} exceeds tolerance {tol:e}")]
    NotHermitian { deviation: f64, tol: f64 },

    #[error("eigendecomposition did not converge")]
    DecompositionFailure,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("coherent state truncation: tail mass {tail_mass:e} exceeds threshold {threshold:e}")]
    Truncation { tail_mass: f64, threshold: f64 },

    #[error("bosonic truncation dimension must be at least 2, got {0}")]
    InvalidTruncation(usize),

    #[error("unknown outcome label `{0}`")]
    UnknownOutcome(String),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("outcome `{0}` has zero probability for this input")]
    ZeroProbabilityOutcome(String),

    #[error("outcome is unreachable: tr{{M†M}} = {norm:e}")]
    UnreachableOutcome { norm: f64 },

    #[error("final outcome {index} is unreachable after this measurement: <B_f|MM†|B_f> = {weight:e}")]
    UnreachableSequence { index: usize, weight: f64 },

    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    #[error("invalid mixture weights: {0}")]
    InvalidWeights(String),

    #[error("mixture component {index} violates its own uncertainty relation")]
    PreconditionViolated { index: usize },

    #[error("QND outcome grid cannot resolve the identity: {0}")]
    CompletenessUnachievable(String),

    #[error("Kraus set is incomplete: max deviation {deviation:e} exceeds tolerance {tol:e}")]
    IncompleteKrausSet { deviation: f64, tol: f64 },

    #[error("state {index} is not normalized (norm {norm})")]
    NonUnitState { index: usize, norm: f64 },

    #[error("unknown observable `{0}`")]
    UnknownObservable(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
