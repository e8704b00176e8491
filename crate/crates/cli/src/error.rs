use serde_json::json;
use thiserror::Error;

/// Config and input-validation problems exit with 2, everything else with 1.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError::Config(vec![message.into()])
    }

    pub fn runtime(message: impl std::fmt::Display) -> Self {
        CliError::Runtime(message.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            CliError::Config(messages) => json!({"error": {"kind": "config", "messages": messages}}),
            CliError::Runtime(message) => json!({"error": {"kind": "runtime", "messages": [message]}}),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Tags a library error as an input problem.
pub(crate) fn input<E: std::fmt::Display>(e: E) -> CliError {
    CliError::config(e.to_string())
}

pub(crate) fn io(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}
