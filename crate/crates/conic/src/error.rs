use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConicError {
    #[error("invalid cone program: {0}")]
    InvalidProgram(String),
    #[error("newton system numerically singular at iteration {iteration}")]
    NumericalBreakdown { iteration: usize },
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}
