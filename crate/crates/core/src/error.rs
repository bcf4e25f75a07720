use thiserror::Error;

/// Errors raised by fitting, evaluation, compression and file handling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("evaluation point coincides with pole {pole} (|s - pole| = {distance:e})")]
    PoleEvaluation { pole: String, distance: f64 },

    #[error("parameter value coincides with rational basis pole {0}")]
    BasisPoleHit(String),

    #[error("resolvent sI - A is numerically singular")]
    SingularResolvent,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("eigenvalue iteration did not converge")]
    NoConvergence,

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("matrix is singular")]
    Singular,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("problem too large: {0}")]
    ProblemTooLarge(String),

    #[error("pole {pole} lies within guard distance {guard} of the parameter interval")]
    GuardViolation { pole: String, guard: f64 },

    #[error("system is not asymptotically stable")]
    UnstableSystem,

    #[error("models do not share the same parametric basis")]
    BasisMismatch,

    #[error("parameter value hits parameter pole {0}")]
    ParameterPoleHit(String),

    #[error("system matrix is singular at s = {0}")]
    SingularSystem(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("fitted local model is unstable and pole flipping is disabled")]
    Unstable,

    #[error("projection matrix W^H V is singular after {0} restarts")]
    SingularProjection(usize),

    #[error("basis poles are not closed under conjugation")]
    NotConjugationClosed,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
