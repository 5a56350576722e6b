use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("period mismatch: {0} vs {1}")]
    PeriodMismatch(f64, f64),
    #[error("operation needs a finite period")]
    InfinitePeriod,
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("not a contraction: {0}")]
    NotContraction(String),
    #[error("the identity has no normalising constant")]
    IdentityMap,
    #[error("displacement is not mean-zero (mean {0:e})")]
    NotMeanZero(f64),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("{0} is outside the sampled horizon {1}")]
    OutsideHorizon(String, String),
    #[error("horizon too small: {0}")]
    HorizonTooSmall(String),
    #[error("invalid time warp: {0}")]
    InvalidWarp(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
