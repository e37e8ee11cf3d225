use std::fmt;

use lexalign::error::Error;

/// Failure of one CLI invocation, mapped to its exit status.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Input { stage: &'static str, message: String },
    Stage { stage: &'static str, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Input { .. } => 3,
            CliError::Stage { .. } => 4,
        }
    }

    pub fn input(stage: &'static str, message: impl Into<String>) -> Self {
        CliError::Input {
            stage,
            message: message.into(),
        }
    }

    /// Classify a library error raised while running `stage`.
    pub fn from_lib(stage: &'static str, e: Error) -> Self {
        let message = e.to_string();
        match e {
            Error::InvalidConfig(_) => CliError::Config(format!("{stage}: {message}")),
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::DuplicateKey(_)
            | Error::EmptyInput(_)
            | Error::UnknownDocument(_)
            | Error::UnknownCluster(_)
            | Error::Snapshot(_) => CliError::Input { stage, message },
            _ => CliError::Stage { stage, message },
        }
    }

    pub fn io(stage: &'static str, e: std::io::Error) -> Self {
        CliError::Stage {
            stage,
            message: e.to_string(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Input { stage, message } => write!(f, "{stage}: input error: {message}"),
            CliError::Stage { stage, message } => write!(f, "{stage}: failed: {message}"),
        }
    }
}

impl std::error::Error for CliError {}
