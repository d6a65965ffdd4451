use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration or arguments; exit code 1.
    #[error("validation error: {0}")]
    Validation(String),

    /// Failure while running an experiment; exit code 2.
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn field(name: &str, e: impl std::fmt::Display) -> Self {
        CliError::Validation(format!("{name}: {e}"))
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl From<rcm_core::Error> for CliError {
    fn from(e: rcm_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
