use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {reason} (token `{token}`)")]
    Parse {
        line: usize,
        token: String,
        reason: String,
    },

    #[error("{file}: {count} malformed line(s); first: {first}")]
    File {
        file: PathBuf,
        count: usize,
        first: Box<Error>,
    },

    #[error("calibration file {0} is missing")]
    MissingCalibration(PathBuf),

    #[error("batch sequence has a gap: batch{missing}.dat is absent but batch{present}.dat exists")]
    BatchGap { missing: u32, present: u32 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{what}: expected dimension {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("need at least two classes, found {0}")]
    SingleClass(usize),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("linear algebra failure: {0}")]
    Numerical(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
