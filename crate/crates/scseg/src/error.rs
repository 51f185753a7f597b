use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the segmentation library.
#[derive(Debug, Error)]
pub enum Error {
    /// A block region does not lie inside its parent plane.
    #[error("region at ({x0},{y0}) with size {size} exceeds plane bounds {width}x{height}")]
    RegionOutOfBounds { x0: usize, y0: usize, size: usize, width: usize, height: usize },

    /// Two lengths or image dimensions that must agree do not.
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch { context: String, expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Raster input the library does not accept (bit depth, alpha, non-PNG).
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// PNG encode/decode failure that is not a plain i/o error.
    #[error("image codec error on {path}: {source}")]
    Codec {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

impl Error {
    pub(crate) fn dims(context: impl Into<String>, expected: usize, actual: usize) -> Self {
        Error::DimensionMismatch { context: context.into(), expected, actual }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
