use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("malformed payload: expected {expected} bytes, found {found}")]
    MalformedPayload { expected: usize, found: usize },
    #[error("unsupported maxval {0} (only 255 is supported)")]
    UnsupportedMaxval(u32),
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unsupported version {0}")]
    UnsupportedVersion(u32),
    #[error("bad model file: {0}")]
    BadModel(String),
    #[error("unsupported command '{0}'")]
    UnsupportedCommand(char),
    #[error("malformed number '{0}'")]
    MalformedNumber(String),
    #[error("malformed svg: {0}")]
    MalformedSvg(String),
    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
    #[error("missing model for '{0}'")]
    MissingModel(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
