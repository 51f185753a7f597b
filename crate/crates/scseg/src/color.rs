//! Full-range BT.601 color conversion.
//!
//! Full-range coefficients keep chroma residual magnitudes on the same 8-bit
//! scale as the segmentation thresholds; studio-range scaling would silently
//! shrink them.

use crate::raster::{PixelPlane, RgbImage, YCbCrImage};

#[inline]
fn round_clamp(v: f64) -> u8 {
    // round half-up, then clamp into the 8-bit range
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// RGB to full-range BT.601 YCbCr, rounded half-up.
pub fn rgb_to_ycbcr(r: u8, g: u8, b: u8) -> (u8, u8, u8) {
    let (rf, gf, bf) = (f64::from(r), f64::from(g), f64::from(b));
    let y = 0.299 * rf + 0.587 * gf + 0.114 * bf;
    let cb = 128.0 - 0.168736 * rf - 0.331264 * gf + 0.5 * bf;
    let cr = 128.0 + 0.5 * rf - 0.418688 * gf - 0.081312 * bf;
    (round_clamp(y), round_clamp(cb), round_clamp(cr))
}

/// Inverse full-range BT.601 conversion (not an exact inverse of the
/// rounded forward transform).
pub fn ycbcr_to_rgb(y: u8, cb: u8, cr: u8) -> (u8, u8, u8) {
    let yf = f64::from(y);
    let cbf = f64::from(cb) - 128.0;
    let crf = f64::from(cr) - 128.0;
    let r = yf + 1.402 * crf;
    let g = yf - 0.344136 * cbf - 0.714136 * crf;
    let b = yf + 1.772 * cbf;
    (round_clamp(r), round_clamp(g), round_clamp(b))
}

/// Converts a whole RGB image into Y/Cb/Cr planes.
pub fn rgb_image_to_ycbcr(rgb: &RgbImage) -> YCbCrImage {
    let (w, h) = (rgb.width(), rgb.height());
    let mut y = Vec::with_capacity(w * h);
    let mut cb = Vec::with_capacity(w * h);
    let mut cr = Vec::with_capacity(w * h);
    for &[r, g, b] in rgb.pixels() {
        let (yy, cbb, crr) = rgb_to_ycbcr(r, g, b);
        y.push(yy);
        cb.push(cbb);
        cr.push(crr);
    }
    YCbCrImage {
        y: PixelPlane::new(w, h, y).expect("plane size matches"),
        cb: PixelPlane::new(w, h, cb).expect("plane size matches"),
        cr: PixelPlane::new(w, h, cr).expect("plane size matches"),
    }
}

/// Converts Y/Cb/Cr planes back to an interleaved RGB image.
pub fn ycbcr_to_rgb_image(image: &YCbCrImage) -> RgbImage {
    RgbImage::from_fn(image.width(), image.height(), |x, y| {
        let (r, g, b) = ycbcr_to_rgb(image.y.get(x, y), image.cb.get(x, y), image.cr.get(x, y));
        [r, g, b]
    })
}
