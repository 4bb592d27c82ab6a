use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: expected key=value, found {text:?}")]
    Syntax { line: usize, text: String },
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("key {0:?} given more than once")]
    DuplicateKey(String),
    #[error("{key}={value}: {reason}")]
    InvalidValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error(transparent)]
    Invalid(#[from] nse3dvar_core::Error),
}

/// Everything a command can fail with. Each variant has a stable class
/// name and exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("missing input {0} (run the upstream command first)")]
    MissingInput(PathBuf),
    #[error("{path}: {reason}")]
    Schema { path: PathBuf, reason: String },
    #[error(transparent)]
    Numerical(#[from] nse3dvar_core::Error),
    #[error("rendering {script} failed: {reason}")]
    Render { script: PathBuf, reason: String },
}

impl CliError {
    pub fn class(&self) -> &'static str {
        match self {
            CliError::Config(_) => "ConfigError",
            CliError::Io { .. } => "IoError",
            CliError::MissingInput(_) => "MissingInputError",
            CliError::Schema { .. } => "SchemaError",
            CliError::Numerical(_) => "NumericalError",
            CliError::Render { .. } => "RenderError",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 3,
            CliError::MissingInput(_) => 4,
            CliError::Schema { .. } => 5,
            CliError::Numerical(_) => 6,
            CliError::Render { .. } => 7,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| {
            if source.kind() == std::io::ErrorKind::NotFound {
                CliError::MissingInput(path)
            } else {
                CliError::Io { path, source }
            }
        }
    }

    pub(crate) fn schema(path: impl Into<PathBuf>, reason: impl Into<String>) -> CliError {
        CliError::Schema {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
