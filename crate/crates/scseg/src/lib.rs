//! Segmentation of screen-content images into a smoothly varying background
//! layer and a text/graphics foreground layer.
//!
//! Each block of the image is modeled as a linear combination of a few
//! low-frequency 2-D cosine basis functions. The model is fitted with
//! least-absolute-deviation regression (solved by ADMM), which is robust to
//! the foreground pixels acting as outliers; pixels the smooth model cannot
//! explain are labeled foreground. Flat blocks and blocks that already fit a
//! least-squares model are resolved by cheaper checks first, and blocks where
//! the robust fit explains too few pixels are split quadtree-style down to
//! 8x8. A final pass re-fits the chroma planes on the detected background and
//! reclaims pixels that only differ in color.
//!
//! The crate also ships two reference segmenters for comparison (hierarchical
//! 2-means clustering and a color-counting block classifier), a synthetic
//! page generator with exact ground truth, and a precision/recall evaluation
//! harness. The `scseg` binary in the companion CLI crate exposes all of it.
//!
//! ```
//! use scseg::{segment_image, SegConfig, YCbCrImage, PixelPlane};
//!
//! let image = YCbCrImage::from_luma(PixelPlane::filled(128, 128, 200));
//! let mask = segment_image(&image, &SegConfig::default()).unwrap();
//! assert_eq!(mask.foreground_count(), 0);
//! ```

pub mod baselines;
pub mod color;
pub mod config;
pub mod dictionary;
pub mod error;
pub mod eval;
pub mod io;
pub mod pipeline;
pub mod raster;
pub mod solver;
pub mod synth;

mod linalg;
mod rng;

pub use config::SegConfig;
pub use error::{Error, Result};
pub use pipeline::{segment_image, segment_image_threads, segment_image_with_stats};
pub use raster::{
    unvectorize_block, vectorize_block, BlockRegion, PixelPlane, RgbImage, SegmentationMask,
    YCbCrImage,
};
