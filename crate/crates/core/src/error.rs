use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("matrix mode error: {0}")]
    Mode(String),

    #[error("graph construction error: {0}")]
    Graph(String),

    #[error("size error: {0}")]
    Size(String),

    #[error("spectral error: {0}")]
    Spectral(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("unknown account: {0}")]
    UnknownAccount(String),

    #[error("unknown space: {0}")]
    UnknownSpace(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
