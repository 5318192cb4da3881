use thiserror::Error;

use crate::solver::ConvergenceTrace;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("layout error: {0}")]
    Layout(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("input error: {0}")]
    Input(String),

    #[error("unsupported layout: {0}")]
    UnsupportedLayout(String),

    #[error("scattering energy {energy} lies within the pole guard of E_k = {pole}")]
    Pole { energy: f64, pole: f64 },

    #[error("optimiser did not converge: {message}")]
    Convergence {
        message: String,
        trace: Box<ConvergenceTrace>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
