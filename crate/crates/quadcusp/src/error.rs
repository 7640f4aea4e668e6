use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),

    #[error("degenerate form: determinant is zero")]
    Degenerate,

    #[error("vector is not isotropic for the form")]
    NotIsotropic,

    #[error("vector is not primitive (gcd of coordinates is {0})")]
    NotPrimitive(String),

    #[error("zero vector")]
    ZeroVector,

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("determinant {got} differs from target {target}")]
    DeterminantMismatch { got: f64, target: f64 },

    #[error("index {index} outside 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("vectors are not opposite: bilinear pairing is zero")]
    NotOpposite,

    #[error("line lies in the hyperplane at infinity of the chart")]
    LineAtInfinity,

    #[error("signature hypothesis violated: {0}")]
    SignatureHypothesis(String),

    #[error("hypothesis x*psi(x) -> 0 violated: {0}")]
    ApproxHypothesis(String),

    #[error("sigma undefined for this approximating function: {0}")]
    SigmaUndefined(String),

    #[error("too few bins for a fit: need 3, have {0}")]
    TooFewBins(usize),

    #[error("empty denominator bin at k = {0}")]
    EmptyBin(i64),

    #[error("insufficient depth: {0}")]
    InsufficientDepth(String),

    #[error("pool is empty")]
    EmptyPool,

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("monotonicity violated: {0}")]
    Monotonicity(String),
}

pub type Result<T> = std::result::Result<T, Error>;
