use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument is outside the domain of the model.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested target cannot be reached with the given parameters.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// Not enough data to determine the requested parameters.
    #[error("underdetermined: {0}")]
    Underdetermined(String),

    #[error("config error in {section}.{key}: {message}")]
    Config {
        section: String,
        key: String,
        message: String,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn infeasible(msg: impl Into<String>) -> Self {
        Error::Infeasible(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
