use thiserror::Error;

/// Errors raised anywhere in the engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite target gradient at x = {point:?}")]
    NonFiniteGradient { point: Vec<f64> },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("iteration {iteration}: non-finite parameter in component {component}")]
    Divergence { iteration: usize, component: usize },

    #[error("component {component}: variance {value:e} fell below floor {floor:e}")]
    VarianceFloor { component: usize, value: f64, floor: f64 },

    #[error("component {component}: NGD produced a non-positive inverse variance {inverse:e}")]
    NegativeVariance { component: usize, inverse: f64 },

    #[error("component {component}: covariance lost positive-definiteness")]
    NotPositiveDefinite { component: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
