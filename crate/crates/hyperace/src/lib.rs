//! File formats, wall-clock timing, benchmarks and plots around
//! [`hyperace_core`].
//!
//! Scenario and experiment files are TOML; every CSV this crate writes starts
//! with `format_version` and `seed` columns.

pub mod bench;
pub mod clock;
pub mod experiment;
pub mod plot;
pub mod scenario;
pub mod trace;

use std::path::{Path, PathBuf};

use hyperace_core::sim::ConfigError;
use hyperace_core::world::WorldError;

/// Version written into every CSV row and scenario file.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Validation(#[from] WorldError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code: 2 for configuration problems, 3 for invalid
    /// scenarios, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) | Error::Config(_) => 2,
            Error::Validation(_) => 3,
            Error::Io { .. } | Error::Csv(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
