use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// A malformed input file.
    #[error("{}: {source}", path.display())]
    Input {
        path: PathBuf,
        #[source]
        source: convgeom_core::Error,
    },
    #[error(transparent)]
    Core(#[from] convgeom_core::Error),
}

impl CliError {
    /// 2 for invalid configurations or arguments, 3 for I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Io { .. } | CliError::Input { .. } => 3,
            CliError::Core(convgeom_core::Error::Io(_)) => 3,
            CliError::Core(_) => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Attach the file name to a core error raised while reading it.
    pub(crate) fn reading(path: impl Into<PathBuf>, e: convgeom_core::Error) -> Self {
        match e {
            convgeom_core::Error::Io(source) => CliError::Io {
                path: path.into(),
                source,
            },
            other => CliError::Input {
                path: path.into(),
                source: other,
            },
        }
    }
}
