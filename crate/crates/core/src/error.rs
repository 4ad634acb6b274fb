use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite state at t = {t} min")]
    NonFinite { t: f64 },

    #[error("step size underflow at t = {t} min (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("query time {t} outside trajectory range [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("length mismatch: predicted has {predicted} values, actual has {actual}")]
    LengthMismatch { predicted: usize, actual: usize },

    #[error("empty series")]
    Empty,

    #[error("actual value at index {index} is zero; MAPE undefined")]
    ZeroActual { index: usize },

    #[error("closed-form steady state requires phi = rho = psi = xi = 0 ({0} is nonzero)")]
    FeedbackActive(&'static str),

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("sensitivity series for `{0}` has zero variance")]
    ZeroVariance(String),

    #[error("cortisol is zero at t = {t} min; relative sensitivity undefined")]
    ZeroCortisol { t: f64 },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. }
                | Error::StepUnderflow { .. }
                | Error::ZeroVariance(_)
                | Error::ZeroCortisol { .. }
        )
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
