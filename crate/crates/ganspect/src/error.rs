//! Error type shared across the crate.

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Model/layer wiring does not match the declared shapes.
    #[error("configuration error: {0}")]
    Config(String),

    /// Input files or series violate a data invariant.
    #[error("data error: {0}")]
    Data(String),

    /// A caller-supplied value is out of range or inconsistent.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// An API was driven in an unsupported order (e.g. backward on a value
    /// that is not on the tape).
    #[error("usage error: {0}")]
    Usage(String),

    /// Training produced a non-finite loss.
    #[error("training error at epoch {epoch}, batch {batch}: {message}")]
    Train {
        epoch: usize,
        batch: usize,
        message: String,
    },

    /// Latent-space inversion produced a non-finite loss.
    #[error("inversion error at iteration {iteration}: {message}")]
    Inversion { iteration: usize, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
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
