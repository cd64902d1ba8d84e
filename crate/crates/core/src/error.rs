use thiserror::Error;

/// Errors raised by the entanglement-detection kernel.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian: relative defect {defect:.3e} exceeds {tol:.1e}")]
    NotHermitian { defect: f64, tol: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("parameter {name} = {value} is outside the valid interval {interval}")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        interval: &'static str,
    },

    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("rejection sampling exhausted after {0} tries")]
    SamplingExhausted(usize),

    #[error("singular value decomposition failed to converge")]
    SvdFailed,
}

pub type Result<T> = std::result::Result<T, Error>;
