//! CLI error classes, each mapped to a documented exit code.

use photosim_core::Error as CoreError;

#[derive(Debug)]
pub enum CliError {
    /// Unreadable, malformed, or invariant-violating configuration (exit 2).
    Config(String),
    /// Report or model file I/O failure (exit 3).
    Io(String),
    /// An operation does not fit the configured hardware (exit 4).
    Capacity(String),
    /// No sweep configuration satisfies the constraints (exit 5).
    Infeasible(String),
    /// Numerical failure: ill-conditioned solve or diverging iteration (exit 6).
    Numerical(String),
    /// Anything else (exit 1).
    Other(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Other(_) => 1,
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Capacity(_) => 4,
            CliError::Infeasible(_) => 5,
            CliError::Numerical(_) => 6,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Io(msg) => write!(f, "i/o error: {msg}"),
            CliError::Capacity(msg) => write!(f, "capacity error: {msg}"),
            CliError::Infeasible(msg) => write!(f, "infeasible: {msg}"),
            CliError::Numerical(msg) => write!(f, "numerical error: {msg}"),
            CliError::Other(msg) => write!(f, "error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Capacity(msg) => CliError::Capacity(msg),
            CoreError::Infeasible(msg) => CliError::Infeasible(msg),
            CoreError::NumericalConditioning(msg) | CoreError::Divergence(msg) => {
                CliError::Numerical(msg)
            }
            CoreError::ModelIo(msg) => CliError::Io(msg),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
