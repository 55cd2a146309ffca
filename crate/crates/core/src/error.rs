use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("moment of order {order} diverges")]
    DivergentMoment { order: f64 },

    #[error("no positive root of E[X^h] = 1: {0}")]
    NoPositiveRoot(String),

    #[error("E log X = {mean_log} is not negative")]
    NotContracting { mean_log: f64 },

    #[error("moment function diverges at h = {boundary} while still below one")]
    DivergentBeforeRoot { boundary: f64 },

    #[error("state overflowed at step {step}")]
    NonFiniteState { step: usize },

    #[error("top order statistics are all equal; tail is degenerate")]
    DegenerateTail,

    #[error("only {found} points above the lower threshold, need {needed}")]
    EmptyTail { found: usize, needed: usize },

    #[error("estimated m_alpha = {m_alpha} (se {std_error}) is not positive")]
    NonPositiveM { m_alpha: f64, std_error: f64 },

    #[error("regime mismatch: {0}")]
    RegimeMismatch(String),

    #[error("tau = E A1^alpha2 = {tau} is not below one")]
    TauNotContracting { tau: f64 },

    #[error("no stationarity witness on the exponent grid")]
    NotStationary,

    #[error("only {found} exceedances, need {needed}")]
    TooFewExceedances { found: usize, needed: usize },

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
