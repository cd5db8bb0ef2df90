use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("side length {0} is not a power of two >= 2")]
    InvalidSize(usize),
    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("invalid norm exponent p = {0}, need p >= 1")]
    InvalidExponent(f64),
    #[error("sparsity {s} out of range for length {len}")]
    SparsityOutOfRange { s: usize, len: usize },
    #[error("invalid Haar index: {0}")]
    InvalidHaarIndex(String),
    #[error("frequency ({k1}, {k2}) outside the K-space range of N = {n}")]
    FrequencyOutOfRange { k1: i64, k2: i64, n: usize },
    #[error("invalid density parameter: {0}")]
    InvalidDensity(String),
    #[error("density '{0}' is degenerate and cannot be sampled stochastically")]
    DegenerateDensity(String),
    #[error("invalid sampling parameter: {0}")]
    InvalidSampling(String),
    #[error("invalid solver option: {0}")]
    InvalidOption(String),
    #[error("support enumeration needs {needed} supports, budget is {budget}; use the Monte-Carlo estimate")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("total variation of the input is zero; decay ratio undefined")]
    ZeroTotalVariation,
}

pub type Result<T> = std::result::Result<T, Error>;
