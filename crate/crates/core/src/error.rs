use thiserror::Error;

/// Errors raised by the kernels, the model layer and the evaluators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("matrix is singular to tolerance (pivot {pivot:e} < {threshold:e})")]
    Singular { pivot: f64, threshold: f64 },

    #[error("eigenvalue iteration did not converge")]
    NoConvergence,

    #[error("unsupported spectrum: {0}")]
    UnsupportedSpectrum(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("block structure mismatch: {0}")]
    StructureMismatch(String),

    #[error("observation has zero probability under every regime")]
    ImpossibleObservation,

    #[error("invalid time: {0}")]
    InvalidTime(String),

    #[error("invalid path record: {0}")]
    InvalidPath(String),

    #[error("unsupported scenario: {0}")]
    UnsupportedScenario(String),

    #[error("conditioning event too rare: acceptance rate {rate:e} below {min:e}")]
    InfeasibleConditioning { rate: f64, min: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
