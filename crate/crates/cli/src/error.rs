//! CLI error type with the exit-code policy: 2 for usage and input
//! problems, 3 for numerical failures surfaced by the library.

use sketchridge_core::error::Error as CoreError;

/// Exit code for usage and input errors.
pub const EXIT_USAGE: i32 = 2;
/// Exit code for numerical failures (singular systems, degenerate tuning).
pub const EXIT_NUMERICAL: i32 = 3;

/// Anything a subcommand can fail with.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags or flag combinations.
    #[error("{0}")]
    Usage(String),
    /// Unreadable or malformed input data.
    #[error("{0}")]
    Input(String),
    /// The computation itself failed.
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Input(_) => EXIT_USAGE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        match err {
            CoreError::SingularSystem(_)
            | CoreError::DegenerateGcv { .. }
            | CoreError::NoValidLambda => CliError::Numerical(err.to_string()),
            _ => CliError::Input(err.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Input(err.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(err: csv::Error) -> Self {
        CliError::Input(err.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(err: serde_json::Error) -> Self {
        CliError::Input(err.to_string())
    }
}

/// Subcommand result alias.
pub type CliResult<T> = Result<T, CliError>;
