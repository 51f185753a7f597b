//! Core raster types: sample planes, color images, block regions, and masks.
//!
//! All planes are 8-bit and row-major. Block vectorization follows a single
//! convention shared by every module: columns of the block are concatenated,
//! so a pixel at local column `x` and local row `y` of a `size`-wide block
//! lands at vector index `x * size + y`.

use crate::error::{Error, Result};

/// One 8-bit sample plane (Y, Cb, Cr, or gray) with row-major storage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelPlane {
    width: usize,
    height: usize,
    samples: Vec<u8>,
}

impl PixelPlane {
    /// Wraps existing samples; `samples.len()` must equal `width * height`.
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Result<Self> {
        if samples.len() != width * height {
            return Err(Error::dims("PixelPlane samples", width * height, samples.len()));
        }
        Ok(Self { width, height, samples })
    }

    /// A plane filled with a single value.
    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self { width, height, samples: vec![value; width * height] }
    }

    /// Builds a plane by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut samples = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                samples.push(f(x, y));
            }
        }
        Self { width, height, samples }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn is_empty(&self) -> bool {
        self.width == 0 || self.height == 0
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        debug_assert!(x < self.width && y < self.height);
        self.samples[y * self.width + x]
    }

    /// Sample with coordinates clamped to the plane bounds (edge replication).
    #[inline]
    pub(crate) fn get_replicated(&self, x: usize, y: usize) -> u8 {
        let cx = x.min(self.width - 1);
        let cy = y.min(self.height - 1);
        self.samples[cy * self.width + cx]
    }
}

/// A color image as three equally sized Y/Cb/Cr planes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct YCbCrImage {
    pub y: PixelPlane,
    pub cb: PixelPlane,
    pub cr: PixelPlane,
}

impl YCbCrImage {
    pub fn new(y: PixelPlane, cb: PixelPlane, cr: PixelPlane) -> Result<Self> {
        for (name, plane) in [("cb", &cb), ("cr", &cr)] {
            if plane.width() != y.width() || plane.height() != y.height() {
                return Err(Error::dims(
                    format!("YCbCrImage {name} plane"),
                    y.width() * y.height(),
                    plane.width() * plane.height(),
                ));
            }
        }
        Ok(Self { y, cb, cr })
    }

    /// Gray image: luma from `y`, both chroma planes at the neutral 128.
    pub fn from_luma(y: PixelPlane) -> Self {
        let cb = PixelPlane::filled(y.width(), y.height(), 128);
        let cr = cb.clone();
        Self { y, cb, cr }
    }

    pub fn width(&self) -> usize {
        self.y.width()
    }

    pub fn height(&self) -> usize {
        self.y.height()
    }
}

/// Interleaved 8-bit RGB image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::dims("RgbImage pixels", width * height, pixels.len()));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [u8; 3],
    ) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self { width, height, pixels }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        debug_assert!(x < self.width && y < self.height);
        self.pixels[y * self.width + x]
    }
}

/// A square, axis-aligned block inside a plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockRegion {
    pub x0: usize,
    pub y0: usize,
    pub size: usize,
}

impl BlockRegion {
    pub fn new(x0: usize, y0: usize, size: usize) -> Self {
        Self { x0, y0, size }
    }

    pub fn fits_in(&self, width: usize, height: usize) -> bool {
        self.x0 + self.size <= width && self.y0 + self.size <= height
    }
}

/// Per-pixel layer labels; `true` marks a foreground pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentationMask {
    width: usize,
    height: usize,
    labels: Vec<bool>,
}

impl SegmentationMask {
    pub fn new(width: usize, height: usize, labels: Vec<bool>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::dims("SegmentationMask labels", width * height, labels.len()));
        }
        Ok(Self { width, height, labels })
    }

    /// All-background mask.
    pub fn background(width: usize, height: usize) -> Self {
        Self { width, height, labels: vec![false; width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    #[inline]
    pub fn is_foreground(&self, x: usize, y: usize) -> bool {
        debug_assert!(x < self.width && y < self.height);
        self.labels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, foreground: bool) {
        debug_assert!(x < self.width && y < self.height);
        self.labels[y * self.width + x] = foreground;
    }

    pub fn foreground_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    pub fn foreground_fraction(&self) -> f64 {
        if self.labels.is_empty() {
            return 0.0;
        }
        self.foreground_count() as f64 / self.labels.len() as f64
    }
}

/// Converts a square block into a vector of length `size * size` by
/// concatenating the block's columns, casting samples to `f64`.
pub fn vectorize_block(plane: &PixelPlane, region: BlockRegion) -> Result<Vec<f64>> {
    if !region.fits_in(plane.width(), plane.height()) {
        return Err(Error::RegionOutOfBounds {
            x0: region.x0,
            y0: region.y0,
            size: region.size,
            width: plane.width(),
            height: plane.height(),
        });
    }
    let n = region.size;
    let mut out = Vec::with_capacity(n * n);
    for x in 0..n {
        for y in 0..n {
            out.push(plane.get(region.x0 + x, region.y0 + y) as f64);
        }
    }
    Ok(out)
}

/// Like [`vectorize_block`] but regions may run past the right/bottom plane
/// edge; out-of-bounds samples are edge-replicated.
pub(crate) fn vectorize_block_replicated(plane: &PixelPlane, region: BlockRegion) -> Vec<f64> {
    let n = region.size;
    let mut out = Vec::with_capacity(n * n);
    for x in 0..n {
        for y in 0..n {
            out.push(plane.get_replicated(region.x0 + x, region.y0 + y) as f64);
        }
    }
    out
}

/// Inverse of [`vectorize_block`]: reshapes a column-concatenated vector back
/// into row-major block order.
pub fn unvectorize_block(values: &[f64], size: usize) -> Result<Vec<f64>> {
    if values.len() != size * size {
        return Err(Error::dims("unvectorize_block values", size * size, values.len()));
    }
    let mut out = vec![0.0; size * size];
    for x in 0..size {
        for y in 0..size {
            out[y * size + x] = values[x * size + y];
        }
    }
    Ok(out)
}
