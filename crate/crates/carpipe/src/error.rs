use std::io;
use std::path::PathBuf;

/// Errors of the std layer. Usage problems map to exit code 1, everything
/// else (bad or missing data) to 2.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{path}: {source}")]
    File { path: PathBuf, source: Box<Error> },
    #[error(transparent)]
    Core(#[from] carpipe_core::Error),
    #[error("write failed: {0}")]
    Write(#[from] io::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }

    pub fn in_file(self, path: impl Into<PathBuf>) -> Self {
        match self {
            e @ (Error::Io { .. } | Error::File { .. } | Error::Usage(_)) => e,
            e => Error::File {
                path: path.into(),
                source: Box::new(e),
            },
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            _ => 2,
        }
    }
}
