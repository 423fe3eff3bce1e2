use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("configuration error: {0}")]
    Config(String),
    /// The denominator of a solution operator fell below its floor.
    #[error("inversion domain violated: minimum denominator {min:.6e} is below floor {floor:.6e}")]
    Inversion { min: f64, floor: f64 },
    /// A forward solver hit a singular or indefinite system.
    #[error("{family} solver failed: {detail}")]
    Solver { family: &'static str, detail: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
