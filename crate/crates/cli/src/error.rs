use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{path}: {source}")]
    Image { path: PathBuf, source: image::ImageError },

    #[error("configuration: {0}")]
    Config(String),

    #[error("solver: {0}")]
    Solver(aitv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Image { .. } => 1,
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

/// Configuration errors from the core map to exit code 2, everything the
/// solver raises afterwards to 3.
impl From<aitv::Error> for CliError {
    fn from(e: aitv::Error) -> Self {
        match e {
            aitv::Error::InvalidConfig { .. } => CliError::Config(e.to_string()),
            other => CliError::Solver(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
