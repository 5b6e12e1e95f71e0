use std::path::PathBuf;

use thiserror::Error;

use crate::quad::QuadError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown modulation format `{0}`")]
    UnknownModulation(String),

    #[error("channel index {index} out of range for a link with {len} channels")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("channels overlap: {0}")]
    Overlap(String),

    #[error("no feasible slot range for a {slots}-slot demand")]
    NoFeasibleSlot { slots: usize },

    #[error(transparent)]
    Quadrature(#[from] QuadError),

    #[error("model error: {0}")]
    Model(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("toml: {0}")]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
