use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("quaternion norm {norm} deviates from 1 by more than 1e-6")]
    NonUnitQuaternion { norm: f64 },
    #[error("matrix is not a proper rotation (orthonormality error {ortho_err:e}, det {det})")]
    NotARotation { ortho_err: f64, det: f64 },
    #[error("look-at is degenerate: forward direction is parallel to the up axis or zero")]
    DegenerateLookAt,
    #[error("field of view {0} rad is outside (0, pi)")]
    InvalidFov(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("point is behind the camera (z = {0})")]
    BehindCamera(f64),
    #[error("invalid range [{0}, {1}]")]
    InvalidRange(f64, f64),
    #[error("invalid normal at row {row}, col {col}")]
    InvalidNormal { row: usize, col: usize },
    #[error("feature vector has (near) zero norm")]
    ZeroFeature,
    #[error("image {width}x{height} is smaller than the {window}x{window} window")]
    TooSmall { width: usize, height: usize, window: usize },
    #[error("scale grid is empty")]
    EmptyGrid,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("invalid manifest: {0}")]
    InvalidManifest(String),
    #[error("no counterpart for frame {0}")]
    MissingCounterpart(String),
    #[error("malformed PFM: {0}")]
    Pfm(String),
    #[error("PNG decode error in {path}: {msg}")]
    PngDecode { path: PathBuf, msg: String },
    #[error("PNG encode error: {0}")]
    PngEncode(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Other(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
