use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("missing input {0}; run the earlier stage first")]
    MissingStageInput(PathBuf),
    #[error(transparent)]
    Runtime(#[from] anyhow::Error),
}

impl CliError {
    /// 2 for configuration and usage problems, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::MissingStageInput(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}
