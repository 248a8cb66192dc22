use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] elastic_kmeans::Error),
    #[error("did not converge within the iteration limit")]
    NotConverged,
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Self::Format { path: path.into(), message: message.into() }
    }

    /// Process exit status: 2 non-convergence, 3 input error, 4 config error.
    pub fn exit_code(&self) -> i32 {
        use elastic_kmeans::Error as Core;
        match self {
            Self::NotConverged => 2,
            Self::Config(_) | Self::Core(Core::Config(_) | Core::TooFewObservations { .. }) => 4,
            Self::Io { .. } | Self::Format { .. } | Self::Core(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
