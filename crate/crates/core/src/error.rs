//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MhError {
    #[error("expression error at position {position}: {message}")]
    Expression { position: usize, message: String },
    #[error("unknown identifier `{0}`")]
    Name(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("invalid growth function: {0}")]
    InvalidFunction(String),
    #[error("no convergence after {iterations} iterations: {message}")]
    Convergence { iterations: usize, message: String },
    #[error("invalid polynomial: {0}")]
    InvalidPolynomial(String),
    #[error("symbol decomposition failed: {0}")]
    Decomposition(String),
    #[error("invalid multiplier symbol: {0}")]
    InvalidSymbol(String),
    #[error("kernel error: {0}")]
    Kernel(String),
    #[error("resource budget exceeded: {0}")]
    Resource(String),
    #[error("atom construction failed: {0}")]
    Construction(String),
    #[error("rank condition violated: {0}")]
    Rank(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("grid error: {0}")]
    Grid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, MhError>;
