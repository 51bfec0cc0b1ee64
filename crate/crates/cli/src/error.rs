use std::path::PathBuf;

use taplab_core::ErrorClass;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] taplab_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Config(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) => match e.class() {
                ErrorClass::Input => 1,
                ErrorClass::Numerical => 2,
                ErrorClass::Config => 3,
            },
            CliError::Io { .. } => 1,
            CliError::Config(_) => 3,
        }
    }
}
