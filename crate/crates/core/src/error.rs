use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("basis dimension {dim} exceeds the configured cap {cap}")]
    DimensionOverflow { dim: usize, cap: usize },

    #[error("eigensolver did not converge (worst residual {residual:.3e})")]
    EigenNotConverged { residual: f64 },

    #[error("flux point {row} failed: {source}")]
    SweepRow {
        row: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("requested {requested} levels but only {available} are available")]
    TooFewLevels { requested: usize, available: usize },

    #[error("time {t} ns lies outside [0, {end}] ns")]
    TimeOutOfRange { t: f64, end: f64 },

    #[error("unsupported rotation angle {0} rad")]
    UnsupportedAngle(f64),

    #[error("unknown operator or gate `{0}`")]
    Unknown(String),

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("fit failed: {reason}")]
    Fit { reason: String },

    #[error("parameter fit did not reach tolerance; best residuals {residuals:?}")]
    ParameterFit { residuals: Vec<f64> },

    #[error("calibration failed: {0}")]
    Calibration(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn fit(reason: impl Into<String>) -> Self {
        Error::Fit {
            reason: reason.into(),
        }
    }
}
