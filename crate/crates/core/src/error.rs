use thiserror::Error;

/// Errors produced by the extension library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid boundary conditions: {0}")]
    InvalidBc(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("non-finite value {value} at node {index} {coords:?}")]
    NonFinite {
        index: usize,
        coords: Vec<f64>,
        value: f64,
    },

    #[error("degenerate mask: {0}")]
    DegenerateMask(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("solver breakdown: {0}")]
    Breakdown(String),

    #[error("too many unknowns for dense solve: {count} > cap {cap}")]
    TooLarge { count: usize, cap: usize },

    #[error("CFL violation: dt*max|Vn|/h = {ratio:.4} exceeds {limit}")]
    Cfl { ratio: f64, limit: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("step failed at t = {t}: {source}")]
    AtTime {
        t: f64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
