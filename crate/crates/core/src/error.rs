use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Stream(#[from] std::io::Error),
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error("validation failed: {0}")]
    Invalid(String),
    #[error("degenerate local frame at scalp entries {0:?}")]
    DegenerateFrames(Vec<usize>),
    #[error("incompatible inputs: {0}")]
    Mismatch(String),
}

impl Error {
    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::Invalid(message.into())
    }

    pub(crate) fn mismatch(message: impl Into<String>) -> Self {
        Error::Mismatch(message.into())
    }

    /// Short stable tag for machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } | Error::Stream(_) => "io",
            Error::Parse { .. } => "parse",
            Error::Invalid(_) => "invalid",
            Error::DegenerateFrames(_) => "degenerate",
            Error::Mismatch(_) => "mismatch",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn read_file(path: &std::path::Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_file(path: &std::path::Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
