use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure classes raised by the library.
///
/// [`Error::kind`] groups them into configuration, data and numerical
/// problems, which the command line maps onto distinct exit codes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("degenerate pair {long}/{short}: {reason}")]
    DegeneratePair {
        long: String,
        short: String,
        reason: String,
    },

    #[error("degenerate volatility: {0}")]
    DegenerateVolatility(String),

    #[error("series are not aligned: {0}")]
    Alignment(String),

    #[error("covariance matrix is singular (condition number {condition:.3e}); most collinear spreads: {first} and {second}")]
    Singular {
        first: String,
        second: String,
        condition: f64,
    },

    #[error("empty portfolio: {0}")]
    EmptyPortfolio(String),

    #[error("validation error: {0}")]
    Validation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Parameter(_) => ErrorKind::Config,
            Error::InsufficientData(_) | Error::Alignment(_) | Error::Validation(_) => {
                ErrorKind::Data
            }
            Error::DegenerateSeries(_)
            | Error::DegeneratePair { .. }
            | Error::DegenerateVolatility(_)
            | Error::Singular { .. }
            | Error::EmptyPortfolio(_) => ErrorKind::Numerical,
        }
    }
}

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
