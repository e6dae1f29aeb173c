use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] csfq::Error),

    /// The data files were written; only the fit failed.
    #[error("fit failed: {0}")]
    Fit(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) => match e {
                csfq::Error::Fit { .. } => 4,
                csfq::Error::Calibration(_) => 5,
                csfq::Error::InvalidParameter { .. } | csfq::Error::Unknown(_) => 2,
                _ => 3,
            },
            CliError::Fit(_) => 4,
            CliError::Io { .. } => 1,
        }
    }
}
