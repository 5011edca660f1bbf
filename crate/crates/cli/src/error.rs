use std::fmt;

use iterint::Error;

/// Failure classes, each with its own exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Malformed input or unusable settings.
    Schema(String),
    /// Numerical accuracy or truncation could not be reached.
    Accuracy(String),
    /// A mathematical invariant failed.
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) => 2,
            CliError::Accuracy(_) => 3,
            CliError::Invariant(_) => 4,
        }
    }

    pub fn context(self, prefix: &str) -> Self {
        match self {
            CliError::Schema(m) => CliError::Schema(format!("{prefix}: {m}")),
            CliError::Accuracy(m) => CliError::Accuracy(format!("{prefix}: {m}")),
            CliError::Invariant(m) => CliError::Invariant(format!("{prefix}: {m}")),
        }
    }

    pub fn class(&self) -> &'static str {
        match self {
            CliError::Schema(_) => "schema",
            CliError::Accuracy(_) => "accuracy",
            CliError::Invariant(_) => "invariant",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Schema(m) | CliError::Accuracy(m) | CliError::Invariant(m) => m,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} error: {}", self.class(), self.message())
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Accuracy { .. } | Error::Truncation { .. } => CliError::Accuracy(e.to_string()),
            Error::Domain(_) => CliError::Schema(e.to_string()),
            _ => CliError::Invariant(e.to_string()),
        }
    }
}
