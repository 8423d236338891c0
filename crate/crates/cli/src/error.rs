use std::fmt;

/// Error carrying the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("verification failed: {0}")]
    Verify(String),
    #[error("divergence: {0}")]
    Diverged(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Verify(_) => 3,
            CliError::Diverged(_) => 4,
        }
    }

    pub fn config(msg: impl fmt::Display) -> Self {
        CliError::Config(msg.to_string())
    }

    pub fn data(msg: impl fmt::Display) -> Self {
        CliError::Data(msg.to_string())
    }
}

impl From<proxsgd::Error> for CliError {
    fn from(e: proxsgd::Error) -> Self {
        use proxsgd::Error as E;
        match e {
            E::Diverged { .. } => CliError::Diverged(e.to_string()),
            E::Parse { .. } | E::Csv(_) | E::Io(_) | E::EmptyDataset => CliError::Data(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
