use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A value fell outside the mathematical domain of an operation.
    #[error("{0}")]
    Domain(String),
    /// A configuration field was invalid or not applicable.
    #[error("field `{field}`: {reason}")]
    Config { field: String, reason: String },
    /// Not enough recorded rounds to form an estimate.
    #[error("{0}")]
    InsufficientData(String),
    /// Bad command-line usage: unknown flag, missing argument.
    #[error("{0}")]
    Usage(String),
    /// Malformed replay or config input. `row` is 1-based; 0 means the header.
    #[error("row {row}: {reason}")]
    Parse { row: usize, reason: String },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(row: usize, reason: impl Into<String>) -> Self {
        Error::Parse {
            row,
            reason: reason.into(),
        }
    }

    /// Short machine-readable tag used as the CLI error prefix.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Config { .. } => "config",
            Error::InsufficientData(_) => "insufficient-data",
            Error::Usage(_) => "usage",
            Error::Parse { .. } => "parse",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
