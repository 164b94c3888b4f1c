use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numeric failure: {0}")]
    Numeric(#[from] exciton_control::Error),

    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn config(field: impl AsRef<str>, reason: impl std::fmt::Display) -> Self {
        CliError::Config(format!("`{}`: {reason}", field.as_ref()))
    }

    /// Prefix the field named in a config error.
    pub fn within(self, prefix: &str) -> Self {
        match self {
            CliError::Config(m) => CliError::Config(format!("{prefix}: {m}")),
            other => other,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(2),
            CliError::Numeric(_) => ExitCode::from(3),
            CliError::Io(_) => ExitCode::from(1),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
