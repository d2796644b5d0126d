use std::process::ExitCode;

use regenline::Error as CoreError;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Truncation(String),
    Validation(String),
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Truncation(_) => ExitCode::from(3),
            CliError::Validation(_) | CliError::Runtime(_) => ExitCode::from(1),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Truncation(m) => write!(f, "truncation risk: {m}"),
            CliError::Validation(m) => write!(f, "validation failed: {m}"),
            CliError::Runtime(e) => write!(f, "error: {e:#}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            // bad parameters reach the core as domain errors
            CoreError::Domain(_) => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.into()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.into())
    }
}
