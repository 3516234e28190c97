use std::path::PathBuf;

/// Everything the runner can fail with. Exit code 1 means the input was
/// unusable; exit code 2 means the numerics failed on a valid input.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("numeric failure in {context}: {source}")]
    Numeric {
        context: String,
        #[source]
        source: ptflow::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 1,
            CliError::Numeric { .. } => 2,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Attaches a context string to a core error.
pub trait NumericContext<T> {
    fn context(self, what: impl Into<String>) -> CliResult<T>;
}

impl<T> NumericContext<T> for ptflow::Result<T> {
    fn context(self, what: impl Into<String>) -> CliResult<T> {
        self.map_err(|source| CliError::Numeric { context: what.into(), source })
    }
}
