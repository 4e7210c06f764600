use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid polynomial: {0}")]
    InvalidPolynomial(String),
    #[error("degenerate Taylor table at z = {0}: no mixed coefficient is nonzero")]
    DegenerateTable(String),
    #[error("moment sequence does not conform to the requested order")]
    NonconformingMoments,
    #[error("grid mismatch between field and operator")]
    GridMismatch,
    #[error("iterative solve failed to converge (residual {residual:.3e} after {iterations} iterations)")]
    SolverDiverged { residual: f64, iterations: usize },
    #[error("boundary contamination: {fraction:.3e} of the mass lies within 3h of the boundary")]
    BoundaryContamination { fraction: f64 },
    #[error("stencil underflow: dtau = {dtau:.3e} is below the solver noise floor")]
    StencilUnderflow { dtau: f64 },
    #[error("tau integral tail {tail:.3e} exceeds tolerance {eps:.3e}")]
    TruncationResidual { tail: f64, eps: f64 },
    #[error("insufficient samples for a fit ({0})")]
    InsufficientSamples(usize),
    #[error("n = {0} too large for full enumeration")]
    TooLarge(usize),
    #[error("pattern {pattern} does not support n = {n}")]
    PatternMismatch { pattern: String, n: usize },
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::ConfigInvalid(e.to_string())
    }
}
