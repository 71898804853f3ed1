use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure reported by an external collaborator: a knowledge source, a
/// parser, an Open IE system, a learned scorer or a remote backbone.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProviderError {
    #[error("transport failure talking to {service}: {message}")]
    Transport { service: String, message: String },
    #[error("{service} returned a malformed response: {message}")]
    Protocol { service: String, message: String },
    #[error("{service} has no entry for {query:?}")]
    Missing { service: String, query: String },
}

impl ProviderError {
    pub fn transport(service: impl Into<String>, message: impl ToString) -> Self {
        ProviderError::Transport { service: service.into(), message: message.to_string() }
    }

    pub fn protocol(service: impl Into<String>, message: impl ToString) -> Self {
        ProviderError::Protocol { service: service.into(), message: message.to_string() }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Record { path: PathBuf, line: usize, message: String },
    #[error("invalid data: {0}")]
    Data(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("backbone error: {0}")]
    Backbone(String),
    #[error("{0} is undefined for this input")]
    Undefined(&'static str),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn data(message: impl ToString) -> Self {
        Error::Data(message.to_string())
    }

    pub fn config(message: impl ToString) -> Self {
        Error::Config(message.to_string())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Provider(_) => 3,
            _ => 2,
        }
    }
}

impl From<candle_core::Error> for Error {
    fn from(err: candle_core::Error) -> Self {
        Error::Backbone(err.to_string())
    }
}
