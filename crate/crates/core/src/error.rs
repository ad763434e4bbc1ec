use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid field specification: {0}")]
    InvalidField(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("p-adic cancellation exhausted all {precision} digits of precision")]
    PrecisionExhausted { precision: u32 },
    #[error("invalid scalar literal `{0}`")]
    BadLiteral(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("operator norm unsupported for this norm: {0}")]
    UnsupportedNorm(String),
    #[error("matrix is singular")]
    Singular,
    #[error("matrix is not block diagonal with respect to the splitting")]
    NotBlockDiagonal,
    #[error("not hyperbolic: {0}")]
    NotHyperbolic(String),
    #[error("bad certificate: {0}")]
    BadCertificate(String),
    #[error("map is not contractive: {0}")]
    NotContractive(String),
    #[error("iteration did not reach tolerance within {0} steps")]
    MaxIterations(usize),
    #[error("required depth {required} exceeds the word-tree cap {cap}")]
    DepthCap { required: usize, cap: usize },
    #[error("no admissible Hölder exponent found: {0}")]
    NoExponent(String),
    #[error("no admissible perturbation size delta: {0}")]
    NoDelta(String),
    #[error("no admissible cut-off radius: {0}")]
    NoRadius(String),
    #[error("cut-off profile does not match the field")]
    ProfileFieldMismatch,
    #[error("cut-off radius too large: {0}")]
    RadiusTooLarge(String),
    #[error("family member violates the delta-ball constraint: {0}")]
    DeltaViolation(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("evaluation failed: {0}")]
    Evaluation(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
