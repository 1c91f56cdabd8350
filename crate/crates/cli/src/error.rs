use std::fmt;
use std::process::ExitCode;

use casimir_core::CasimirError;

/// Failure of a CLI run, classified by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Malformed TOML, unknown key or violated constraint.
    Config(String),
    /// Physics or numerical failure (contact, snap-in, non-convergence).
    Physics(String),
    /// Bad command-line usage.
    Usage(String),
    /// Output could not be written.
    Io(String),
    /// `validate` ran and at least one check failed.
    Checks(usize),
}

impl CliError {
    pub fn config(key: &str, constraint: impl fmt::Display) -> Self {
        Self::Config(format!("invalid `{key}`: {constraint}"))
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Config(_) => 2,
            CliError::Physics(_) => 3,
            CliError::Usage(_) => 4,
            CliError::Io(_) | CliError::Checks(_) => 1,
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Physics(m) => write!(f, "physics error: {m}"),
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Checks(n) => write!(f, "{n} validation check(s) failed"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CasimirError> for CliError {
    fn from(e: CasimirError) -> Self {
        if e.is_config() {
            CliError::Config(e.to_string())
        } else {
            CliError::Physics(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
