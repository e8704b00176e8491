use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("invalid date {0:?}: expected YYYY-MM with month 1-12 and year 1800-2200")]
    InvalidDate(String),

    #[error("duplicate compound id {0:?}")]
    DuplicateCompound(String),

    #[error("duplicate feature name {0:?}")]
    DuplicateFeature(String),

    #[error("no compounds are shared by all inputs")]
    EmptyIntersection,

    #[error("all features filtered")]
    AllFeaturesFiltered,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("{0}")]
    Split(String),

    #[error("training data must contain both classes")]
    OneClass,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("p-value {0} outside the open interval (0, 1)")]
    PValueOutOfRange(f64),

    #[error("value {0} outside the domain of {1}")]
    Domain(f64, &'static str),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}
