use std::process::ExitCode;

use arbitrage_core::ArbError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{context}: {source}")]
    Data {
        context: String,
        #[source]
        source: ArbError,
    },

    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Usage(_) => 1,
            CliError::Data { .. } => 2,
            CliError::Internal(_) => 3,
        })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Data { .. } => "data",
            CliError::Internal(_) => "internal",
        }
    }
}

/// Attaches context to library errors. Invalid arguments become usage
/// errors, everything else is a data error.
pub trait Context<T> {
    fn context(self, what: impl Into<String>) -> Result<T, CliError>;
}

impl<T> Context<T> for Result<T, ArbError> {
    fn context(self, what: impl Into<String>) -> Result<T, CliError> {
        self.map_err(|source| match source {
            ArbError::InvalidArgument(msg) => CliError::Usage(format!("{}: {msg}", what.into())),
            source => CliError::Data {
                context: what.into(),
                source,
            },
        })
    }
}
