use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("mesh is not watertight ({open_edges} open or non-manifold edges); use surface-only voxelization instead")]
    NotWatertight { open_edges: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("forward cache does not match the scene being differentiated")]
    CacheMismatch,

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("image export: {0}")]
    Image(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
