use std::path::PathBuf;

use thiserror::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_PARSE: u8 = 3;
pub const EXIT_DIVERGENCE: u8 = 4;
pub const EXIT_INTERNAL: u8 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] loopmesh::Error),

    #[error("config: {0}")]
    Config(String),

    #[error("{}: row {row}: {message}", path.display())]
    CsvRow {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: input hash changed (expected {expected}, found {found})", path.display())]
    InputChanged {
        path: PathBuf,
        expected: String,
        found: String,
    },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 config, 3 parse or IO, 4 divergence.
    pub fn exit_code(&self) -> u8 {
        use loopmesh::Error as E;
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::CsvRow { .. } | CliError::Io { .. } | CliError::InputChanged { .. } => {
                EXIT_PARSE
            }
            CliError::Core(e) => match e.root() {
                E::Config(_) | E::Shape(_) => EXIT_CONFIG,
                E::Divergence { .. } => EXIT_DIVERGENCE,
                E::FrameMismatch { .. } => EXIT_INTERNAL,
                _ => EXIT_PARSE,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
