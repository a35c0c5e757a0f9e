use std::path::{Path, PathBuf};

use thiserror::Error;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Model(#[from] snnss::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        use snnss::Error as E;
        match self {
            CliError::Config(_) => EXIT_USAGE,
            CliError::Io { .. } => EXIT_USAGE,
            CliError::Model(e) => match e {
                E::Resource(_) => EXIT_RESOURCE,
                // the model itself fails the requested check
                E::NonErgodic(_) | E::DegenerateSpectrum(_) | E::FitDegenerate(_) => {
                    EXIT_VERIFICATION
                }
                _ => EXIT_USAGE,
            },
        }
    }
}
