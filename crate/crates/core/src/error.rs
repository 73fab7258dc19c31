//! Error type shared by all simulator modules.

use std::path::PathBuf;

use crate::scenario::CavId;

/// Crate-wide error variants.
///
/// Distinct kinds matter to callers: the CLI maps [`Error::InvalidArgument`]
/// and [`Error::Validation`] to exit code 1, file problems keep their path,
/// and the exhaustive oracles refuse oversized instances instead of running
/// forever.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("instance too large for exhaustive search: {0}")]
    InstanceTooLarge(String),

    #[error("no feasible link from {src} to {dst}")]
    InfeasibleLink { src: CavId, dst: CavId },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
