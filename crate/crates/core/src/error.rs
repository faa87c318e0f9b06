use thiserror::Error;

/// Errors raised by the measure, scenery and experiment machinery.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("model `{0}` is atomic; scenery-flow operations need a non-atomic measure")]
    AtomicModel(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("normalization error: {0}")]
    Normalization(String),

    #[error("insufficient digits: need {needed}, have {available}")]
    InsufficientDigits { needed: usize, available: usize },

    #[error("zero mass window around the point (point outside the support)")]
    ZeroMass,

    #[error("diffeomorphism error: {0}")]
    Diffeo(String),

    #[error("low signal: best magnitude {magnitude:.3e} below floor {floor:.3e}")]
    LowSignal { magnitude: f64, floor: f64 },

    #[error("too many low-signal points: {low} of {total}")]
    LowSignalFraction { low: usize, total: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("config error: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
