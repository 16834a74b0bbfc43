use sane_core::engine::EngineError;
use thiserror::Error;

/// Two failure families, matching the process exit codes: configuration
/// problems (schema, missing files, bad labels) exit 2; runtime failures
/// (engine, metrics, output I/O) exit 3.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<EngineError> for CliError {
    fn from(err: EngineError) -> Self {
        match err {
            // The engine re-validates its inputs; those failures are still
            // configuration mistakes from the user's point of view.
            EngineError::InvalidConfig(_)
            | EngineError::LabelsRequired
            | EngineError::LabelIndex { .. }
            | EngineError::DuplicateLabel(_) => CliError::Config(err.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Runtime(err.to_string())
    }
}
