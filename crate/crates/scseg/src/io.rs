//! PNG loading and writing.
//!
//! PNG is the only accepted raster format, restricted to 8-bit gray or RGB
//! without alpha. Masks round-trip losslessly as 0/255 grayscale PNGs.

use std::path::Path;

use image::{DynamicImage, ImageFormat};

use crate::color::{rgb_image_to_ycbcr, ycbcr_to_rgb_image};
use crate::error::{Error, Result};
use crate::raster::{PixelPlane, RgbImage, SegmentationMask, YCbCrImage};

/// A decoded raster with both color representations: the Y/Cb/Cr planes the
/// segmenters fit, and the raw RGB the color-counting baseline needs.
#[derive(Debug, Clone)]
pub struct LoadedImage {
    pub ycbcr: YCbCrImage,
    pub rgb: RgbImage,
}

fn map_image_error(path: &Path, err: image::ImageError) -> Error {
    match err {
        image::ImageError::IoError(source) => Error::Io { path: path.into(), source },
        image::ImageError::Unsupported(e) => Error::UnsupportedFormat(e.to_string()),
        other => Error::Codec { path: path.into(), source: other },
    }
}

/// Decodes an 8-bit gray or RGB PNG. Gray inputs become luma with neutral
/// chroma; anything with an alpha channel or more than 8 bits per sample is
/// rejected.
pub fn load_image(path: impl AsRef<Path>) -> Result<LoadedImage> {
    let path = path.as_ref();
    let decoded = image::open(path).map_err(|e| map_image_error(path, e))?;
    match decoded {
        DynamicImage::ImageLuma8(gray) => {
            let (w, h) = (gray.width() as usize, gray.height() as usize);
            let y = PixelPlane::new(w, h, gray.into_raw())?;
            let rgb = RgbImage::from_fn(w, h, |x, yy| {
                let v = y.get(x, yy);
                [v, v, v]
            });
            Ok(LoadedImage { ycbcr: YCbCrImage::from_luma(y), rgb })
        }
        DynamicImage::ImageRgb8(buffer) => {
            let (w, h) = (buffer.width() as usize, buffer.height() as usize);
            let raw = buffer.into_raw();
            let pixels: Vec<[u8; 3]> = raw.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
            let rgb = RgbImage::new(w, h, pixels)?;
            Ok(LoadedImage { ycbcr: rgb_image_to_ycbcr(&rgb), rgb })
        }
        DynamicImage::ImageLumaA8(_) | DynamicImage::ImageRgba8(_) => {
            Err(Error::UnsupportedFormat(format!(
                "{}: alpha channels are not supported",
                path.display()
            )))
        }
        other => Err(Error::UnsupportedFormat(format!(
            "{}: only 8-bit gray or RGB PNG is supported, got {:?}",
            path.display(),
            other.color()
        ))),
    }
}

/// Writes a mask as an 8-bit grayscale PNG, foreground = 255.
pub fn write_mask(mask: &SegmentationMask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let pixels: Vec<u8> = mask.labels().iter().map(|&fg| if fg { 255 } else { 0 }).collect();
    let buffer = image::GrayImage::from_raw(mask.width() as u32, mask.height() as u32, pixels)
        .expect("buffer size matches mask");
    buffer.save_with_format(path, ImageFormat::Png).map_err(|e| map_image_error(path, e))
}

/// Loads a grayscale PNG back into a mask; samples of at least 128 count as
/// foreground.
pub fn load_mask(path: impl AsRef<Path>) -> Result<SegmentationMask> {
    let path = path.as_ref();
    let decoded = image::open(path).map_err(|e| map_image_error(path, e))?;
    let gray = match decoded {
        DynamicImage::ImageLuma8(gray) => gray,
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "{}: masks must be 8-bit grayscale PNG, got {:?}",
                path.display(),
                other.color()
            )))
        }
    };
    let (w, h) = (gray.width() as usize, gray.height() as usize);
    SegmentationMask::new(w, h, gray.into_raw().iter().map(|&v| v >= 128).collect())
}

/// Writes a color image as an 8-bit RGB PNG (converting from YCbCr).
pub fn write_ycbcr_png(image: &YCbCrImage, path: impl AsRef<Path>) -> Result<()> {
    write_rgb_png(&ycbcr_to_rgb_image(image), path)
}

/// Writes an RGB image as an 8-bit PNG.
pub fn write_rgb_png(rgb: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut raw = Vec::with_capacity(rgb.width() * rgb.height() * 3);
    for &[r, g, b] in rgb.pixels() {
        raw.extend_from_slice(&[r, g, b]);
    }
    let buffer = image::RgbImage::from_raw(rgb.width() as u32, rgb.height() as u32, raw)
        .expect("buffer size matches image");
    buffer.save_with_format(path, ImageFormat::Png).map_err(|e| map_image_error(path, e))
}
