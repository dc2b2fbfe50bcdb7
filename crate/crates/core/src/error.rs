use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported dimension {0} (expected 1, 2 or 3)")]
    UnsupportedDimension(usize),
    #[error("cells per axis must be >= {min} (and a power of two outside toy grids), got {n}")]
    InvalidResolution { n: usize, min: usize },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("size mismatch: expected {expected} values, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },
    #[error("non-finite value at cell {0}")]
    NonFinite(usize),
    #[error("value {value} at cell {index} outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate shape: {0}")]
    DegenerateShape(String),
    #[error("grid too large for exhaustive enumeration: {cells} cells (limit {limit})")]
    GridTooLarge { cells: usize, limit: usize },
    #[error("transport step too large: |s| max|xi| = {0}")]
    StepTooLarge(f64),
    #[error("series evaluation did not converge: {0}")]
    NotConverged(String),
    #[error("solver stopped after {iterations} iterations with residual {residual:e}")]
    SolverFailed { iterations: usize, residual: f64 },
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("precondition violated for {check}: {reason}")]
    Precondition { check: &'static str, reason: String },
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
