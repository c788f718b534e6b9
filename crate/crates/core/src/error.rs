use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("invalid tour: {0}")]
    InvalidTour(String),

    #[error("cannot apply event: {0}")]
    EventApplication(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure at {point:?}: {message}")]
    NumericalFailure { point: Vec<f64>, message: String },

    #[error("invalid comparison: {0}")]
    InvalidComparison(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("run {run} (seed {seed}): {source}")]
    Run {
        run: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than a failure while solving.
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::Config(_) | Error::Format { .. } | Error::InvalidComparison(_) => true,
            Error::InvalidArgument(_) | Error::InvalidInstance(_) => true,
            Error::Run { source, .. } => source.is_config_error(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
