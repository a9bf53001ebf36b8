use thiserror::Error;

/// Crate-wide error type. The CLI maps each variant to a distinct exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("identification error: {0}")]
    Identification(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
    pub fn identification(msg: impl Into<String>) -> Self {
        Error::Identification(msg.into())
    }
    pub fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }

    /// Exit code for the CLI: 0 success, 2 input, 3 config, 4 identification,
    /// 5 parse, 6 io, 7 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Input(_) => 2,
            Error::Config(_) => 3,
            Error::Identification(_) => 4,
            Error::Parse { .. } => 5,
            Error::Io(_) => 6,
            Error::Internal(_) => 7,
        }
    }
}
