use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the simulator, learner and imaging pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("operand {value} does not fit in {width} bits")]
    OperandOutOfRange { value: u32, width: u32 },

    #[error("value {value} outside quantizer domain [0, {max}]")]
    QuantizerDomain { value: u32, max: u32 },

    #[error("cluster index {index} outside [1, {count}]")]
    ClusterOutOfRange { index: u32, count: u32 },

    #[error("width {width} is too large for an exhaustive sweep (max {max})")]
    SweepTooLarge { width: u32, max: u32 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: line {line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("image {path}: {msg}")]
    Image { path: PathBuf, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

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
}
