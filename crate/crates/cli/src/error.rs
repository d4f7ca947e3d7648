use std::fmt::Display;
use std::path::Path;

use thiserror::Error;

use crate::config::ConfigError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Unwritable output or unreadable config file.
    #[error("{0}")]
    Io(String),

    #[error("{0} validation check(s) failed")]
    Validation(usize),
}

impl CliError {
    pub fn io(path: &Path, err: impl Display) -> Self {
        Self::Io(format!("{}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Validation(_) => 1,
            Self::Config(_) | Self::Io(_) => 2,
            Self::Numerical(_) => 3,
        }
    }
}

impl From<twosphere::Error> for CliError {
    fn from(e: twosphere::Error) -> Self {
        Self::Numerical(e.to_string())
    }
}
