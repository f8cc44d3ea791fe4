use serde_json::{json, Value};
use thiserror::Error;

/// Exit code for a failed run.
pub const EXIT_RUN_FAILURE: i32 = 1;
/// Exit code for an unusable configuration or command line.
pub const EXIT_CONFIG_ERROR: i32 = 2;

#[derive(Debug, Clone, Error)]
pub enum CliError {
    #[error("{message}")]
    Config { message: String, detail: Option<Value> },
    #[error("{message}")]
    Run { message: String, detail: Option<Value> },
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError::Config {
            message: message.into(),
            detail: None,
        }
    }

    pub fn run(message: impl Into<String>) -> Self {
        CliError::Run {
            message: message.into(),
            detail: None,
        }
    }

    pub fn with_detail(self, value: Value) -> Self {
        match self {
            CliError::Config { message, .. } => CliError::Config {
                message,
                detail: Some(value),
            },
            CliError::Run { message, .. } => CliError::Run {
                message,
                detail: Some(value),
            },
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => EXIT_CONFIG_ERROR,
            CliError::Run { .. } => EXIT_RUN_FAILURE,
        }
    }

    /// `{"error": {"kind", "message", "exit_code", "detail"?}}`.
    pub fn to_json(&self) -> Value {
        let (kind, message, detail) = match self {
            CliError::Config { message, detail } => ("config-error", message, detail),
            CliError::Run { message, detail } => ("run-failure", message, detail),
        };
        let mut body = json!({
            "kind": kind,
            "message": message,
            "exit_code": self.exit_code(),
        });
        if let Some(d) = detail {
            body["detail"] = d.clone();
        }
        json!({ "error": body })
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::run(format!("io error: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::run(format!("json error: {e}"))
    }
}

impl From<inls_core::Error> for CliError {
    fn from(e: inls_core::Error) -> Self {
        CliError::run(e.to_string())
    }
}
