use std::fmt::Display;

/// Failures split by exit status: bad configuration (2) versus bad or
/// unreadable data (1).
#[derive(Debug)]
pub enum CliError {
    Config(anyhow::Error),
    Data(anyhow::Error),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Data(_) => 1,
            CliError::Config(_) => 2,
        }
    }

    pub fn config(msg: impl Display) -> Self {
        CliError::Config(anyhow::anyhow!("{msg}"))
    }

    pub fn data(msg: impl Display) -> Self {
        CliError::Data(anyhow::anyhow!("{msg}"))
    }
}

impl Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "config error: {e:#}"),
            CliError::Data(e) => write!(f, "data error: {e:#}"),
        }
    }
}

pub trait Classify<T> {
    fn config(self, context: impl Display) -> Result<T, CliError>;
    fn data(self, context: impl Display) -> Result<T, CliError>;
}

impl<T, E: Display> Classify<T> for Result<T, E> {
    fn config(self, context: impl Display) -> Result<T, CliError> {
        self.map_err(|e| CliError::config(format!("{context}: {e}")))
    }

    fn data(self, context: impl Display) -> Result<T, CliError> {
        self.map_err(|e| CliError::data(format!("{context}: {e}")))
    }
}
