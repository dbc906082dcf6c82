use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("not a row contraction (norm {norm:.6})")]
    NotContraction { norm: f64 },

    #[error("truncated Fock space too large: {words} words exceeds the limit {limit}")]
    TooLarge { words: usize, limit: usize },

    #[error("operation requires arity 1, got {0}")]
    ArityNotOne(usize),

    #[error("bad parameter: {0}")]
    BadParameter(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("link contraction is not contractive (norm {norm:.6})")]
    GammaNotContractive { norm: f64 },

    #[error("residual too large: {what} = {residual:.3e}")]
    ResidualTooLarge { what: String, residual: f64 },

    #[error("map is not well defined: {what} = {residual:.3e}")]
    NotWellDefined { what: String, residual: f64 },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("decomposition failed: {what} = {residual:.3e}")]
    DecompositionFailed { what: String, residual: f64 },

    #[error("defect dimensions differ: {left} vs {right}")]
    DefectRankMismatch { left: usize, right: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
