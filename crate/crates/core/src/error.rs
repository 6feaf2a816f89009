use thiserror::Error;

/// Errors raised by constructions, measurements and the batch driver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// The quadrature grid cannot resolve the requested object.
    #[error("insufficient resolution: {0}")]
    Resolution(String),

    /// A precondition on the numerical parameters failed (radius range, frequency range, ...).
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("spectral window [{lo}, {hi}) contains no model frequency")]
    EmptyWindow { lo: f64, hi: f64 },

    #[error("covering leaves {uncovered} grid nodes uncovered")]
    CoverageGap { uncovered: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn resolution(msg: impl Into<String>) -> Self {
        Error::Resolution(msg.into())
    }

    pub(crate) fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }
}
