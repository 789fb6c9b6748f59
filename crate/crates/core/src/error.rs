use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("unknown service `{0}`")]
    UnknownService(String),

    #[error("unknown manufacturer `{0}`")]
    UnknownManufacturer(String),

    #[error("`{0}` is a manufacturer node, not a service")]
    NotAService(String),

    #[error("duplicate service name `{0}`")]
    DuplicateService(String),

    #[error("degenerate class distribution: {0}")]
    DegenerateClasses(String),

    #[error("class {label} has {count} members, too few to populate every split")]
    ClassTooSmall { label: u8, count: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("oversampling failed: {0}")]
    Oversampling(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("bad binary file {path}: {msg}")]
    Format { path: PathBuf, msg: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    /// Whether this is a numeric failure rather than a data or usage problem.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Numeric(_))
    }

    /// Whether this stems from configuration rather than input data.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}
