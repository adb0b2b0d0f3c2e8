use std::path::PathBuf;

use css_core::CssError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("solver did not converge: {0}")]
    NonConvergence(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed profile {path}: {message}")]
    Profile { path: PathBuf, message: String },

    #[error(transparent)]
    Core(CssError),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 0 ok, 2 configuration, 3 non-convergence, 4 I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::NonConvergence(_) => 3,
            CliError::Io { .. } | CliError::Profile { .. } => 4,
            CliError::Core(e) => match e {
                CssError::Config(_) => 2,
                CssError::NonConvergence { .. } | CssError::Continuation { .. } => 3,
                _ => 3,
            },
        }
    }
}

impl From<CssError> for CliError {
    fn from(e: CssError) -> Self {
        match e {
            CssError::Config(m) => CliError::Config(m),
            other => CliError::Core(other),
        }
    }
}
