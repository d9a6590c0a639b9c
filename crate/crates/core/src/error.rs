use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },

    #[error("Bloch gap closes (min |d(k)| = {min_gap:e}); winding number undefined")]
    GapClosed { min_gap: f64 },

    #[error("eigensolver did not converge: {0}")]
    EigensolverFailure(String),

    #[error("degenerate coupling: {0}")]
    DegenerateCoupling(String),

    #[error("parameters are not in the topological phase (|delta| = {delta_abs} >= delta_c = {delta_c})")]
    NotTopological { delta_abs: f64, delta_c: f64 },

    #[error("no decaying root pair inside the unit circle")]
    NoDecayingBranch,

    #[error("mid-gap states are not separated from the bulk: {0}")]
    NoZeroModes(String),

    #[error("index {index} out of range for {len} states")]
    BadIndex { index: usize, len: usize },

    #[error("linear system is singular (relative residual {residual:e})")]
    SingularSystem { residual: f64 },

    #[error("drift matrix is not stable (max Re eigenvalue {max_re:e})")]
    Unstable { max_re: f64 },

    #[error("no coherence transition on the scan grid: {0}")]
    NoTransition(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("config: {0}")]
    Config(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParam { field, reason: reason.into() }
}
