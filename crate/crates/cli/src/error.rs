use std::path::PathBuf;

use aei_core::ErrorClass;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("bundle integrity error in {}: {message}", .bundle.display())]
    Bundle { bundle: PathBuf, message: String },

    #[error("empty table: {0}")]
    EmptyTable(String),

    #[error(transparent)]
    Core(#[from] aei_core::Error),
}

impl CliError {
    pub fn bundle(bundle: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        CliError::Bundle {
            bundle: bundle.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Core(aei_core::Error::io(path, source))
    }

    /// 2 for configuration, 3 for data, 4 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Bundle { .. } | CliError::EmptyTable(_) => 3,
            CliError::Core(e) => match e.class() {
                ErrorClass::Config => 2,
                ErrorClass::Data => 3,
                ErrorClass::Numerical => 4,
            },
        }
    }
}
