use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (max |A - A^dagger| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is rank deficient (|r_{index}{index}| = {magnitude:e})")]
    RankDeficient { index: usize, magnitude: f64 },

    #[error("not a density matrix: {0}")]
    NotDensityMatrix(String),

    #[error("invalid exponent: {0}")]
    InvalidExponent(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("net covering radius {given} is too coarse; need eta <= {required}")]
    NetTooCoarse { given: f64, required: f64 },

    #[error("net construction is limited to d <= 3 (requested d = {d})")]
    NetDimensionGuard { d: usize },

    #[error("net candidate budget exhausted before any point was admitted")]
    NetBudgetExhausted,
}

pub type Result<T> = std::result::Result<T, Error>;
