use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A configuration problem, located by key and (when parsed from a file) line.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            line: None,
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn at_line(mut self, line: usize) -> Self {
        self.line = Some(line);
        self
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: `{}`: {}", self.key, self.message),
            None => write!(f, "`{}`: {}", self.key, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),

    #[error("user index {index} out of range for {users} users")]
    UserIndex { index: usize, users: usize },

    #[error("{0} is not positive definite")]
    NotPositiveDefinite(&'static str),

    #[error("matrix has eigenvalue {value:e} below the PSD tolerance {tol:e}")]
    NotPsd { value: f64, tol: f64 },

    #[error("channel estimation power: {0}")]
    ChannelEstimation(String),

    #[error("dictionary has {columns} columns but {chains} RF chains were requested")]
    DictionaryTooSmall { columns: usize, chains: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("semidefinite program of size {n} exceeds the cap {cap}")]
    SdpTooLarge { n: usize, cap: usize },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}
