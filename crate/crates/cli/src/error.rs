use thiserror::Error;

/// Failures that end a run before a report is produced.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{0}")]
    Run(#[from] finsler_douglas::Error),

    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn config(e: finsler_douglas::Error) -> Self {
        CliError::Config(e.to_string())
    }

    /// 2 for configuration and usage problems, 1 for failed computations.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Run(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Run(_) => "run",
            CliError::Io(_) => "io",
        }
    }
}
