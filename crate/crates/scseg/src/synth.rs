//! Synthetic screen-content pages with exact ground truth.
//!
//! Backgrounds are synthesized per 64x64 tile from the same low-frequency
//! cosine bases the segmenter fits (DC drawn large, AC small, so samples
//! stay inside [0, 255] without clamping), or as flat/two-level fields.
//! Foreground strokes are stamped with a fixed luma offset and recorded
//! pixel-exactly in the ground-truth mask; edges are hard by construction.

use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::raster::{PixelPlane, SegmentationMask, YCbCrImage};
use crate::rng::SplitMix64;

const SYNTH_TILE: usize = 64;
const SYNTH_BASES: usize = 10;

/// Background field of a generated page.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackgroundKind {
    /// Per-tile random combination of the first 10 cosine bases.
    DctRandom,
    /// Single constant luma.
    Flat,
    /// Each 64-tile split into two flat halves with well-separated lumas.
    TwoRegion,
}

/// Foreground geometry of a generated page.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForegroundKind {
    /// Short thin strokes, the text stand-in.
    RectTextStrokes,
    /// Full-width or full-height one-pixel lines.
    Lines,
}

/// Recipe for one synthetic page.
#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub width: usize,
    pub height: usize,
    pub background: BackgroundKind,
    pub foreground: ForegroundKind,
    /// Absolute luma offset of stamped foreground pixels.
    pub fg_luma_offset: u8,
    /// Target fraction of foreground pixels, in [0, 0.5]; 0 stamps nothing.
    pub fg_coverage: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            width: 512,
            height: 384,
            background: BackgroundKind::DctRandom,
            foreground: ForegroundKind::RectTextStrokes,
            fg_luma_offset: 60,
            fg_coverage: 0.1,
            seed: 0,
        }
    }
}

impl SynthSpec {
    fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidArgument("page dimensions must be positive".into()));
        }
        if !self.fg_coverage.is_finite() || !(0.0..=0.5).contains(&self.fg_coverage) {
            return Err(Error::InvalidArgument(format!(
                "fg_coverage must lie in [0, 0.5], got {}",
                self.fg_coverage
            )));
        }
        Ok(())
    }
}

/// Generates the page and its exact foreground mask, deterministically in
/// the seed.
pub fn generate(spec: &SynthSpec) -> Result<(YCbCrImage, SegmentationMask)> {
    spec.validate()?;
    let mut rng = SplitMix64::new(spec.seed);
    let (w, h) = (spec.width, spec.height);

    let mut luma = vec![0u8; w * h];
    match spec.background {
        BackgroundKind::Flat => {
            let value = 40 + rng.below(177) as u8; // [40, 216]
            luma.fill(value);
        }
        BackgroundKind::DctRandom => {
            let dict = Dictionary::cached(SYNTH_TILE, SYNTH_BASES)?;
            for ty in (0..h).step_by(SYNTH_TILE) {
                for tx in (0..w).step_by(SYNTH_TILE) {
                    fill_dct_tile(&mut luma, w, h, tx, ty, &dict, &mut rng);
                }
            }
        }
        BackgroundKind::TwoRegion => {
            for ty in (0..h).step_by(SYNTH_TILE) {
                for tx in (0..w).step_by(SYNTH_TILE) {
                    let low = 40.0 + rng.range_f64(0.0, 80.0);
                    let high = low + 60.0 + rng.range_f64(0.0, 35.0);
                    fill_two_region_tile(&mut luma, w, h, tx, ty, low as u8, high as u8);
                }
            }
        }
    }

    let mut labels = vec![false; w * h];
    if spec.fg_coverage > 0.0 {
        stamp_foreground(spec, &mut luma, &mut labels, &mut rng);
    }

    let image = YCbCrImage::from_luma(PixelPlane::new(w, h, luma)?);
    Ok((image, SegmentationMask::new(w, h, labels)?))
}

/// DC drawn so the tile mean sits in [70, 180]; the nine AC amplitudes stay
/// small enough that the synthesized samples cannot leave [0, 255].
fn fill_dct_tile(
    luma: &mut [u8],
    w: usize,
    h: usize,
    tx: usize,
    ty: usize,
    dict: &Dictionary,
    rng: &mut SplitMix64,
) {
    let n = SYNTH_TILE;
    let mut alpha = vec![0.0; SYNTH_BASES];
    alpha[0] = rng.range_f64(70.0, 180.0) * n as f64;
    for a in alpha.iter_mut().skip(1) {
        // each unit of AC coefficient moves a sample by at most 2/N
        *a = rng.range_f64(-1.3, 1.3) * n as f64;
    }
    let tile = dict.synthesize(&alpha);
    let xe = (tx + n).min(w);
    let ye = (ty + n).min(h);
    for y in ty..ye {
        for x in tx..xe {
            let v = tile[(x - tx) * n + (y - ty)].round();
            debug_assert!((0.0..=255.0).contains(&v), "tile sample out of range: {v}");
            luma[y * w + x] = v.clamp(0.0, 255.0) as u8;
        }
    }
}

fn fill_two_region_tile(
    luma: &mut [u8],
    w: usize,
    h: usize,
    tx: usize,
    ty: usize,
    low: u8,
    high: u8,
) {
    let xe = (tx + SYNTH_TILE).min(w);
    let ye = (ty + SYNTH_TILE).min(h);
    for y in ty..ye {
        for x in tx..xe {
            let left_half = x - tx < SYNTH_TILE / 2;
            luma[y * w + x] = if left_half { low } else { high };
        }
    }
}

/// Offsets a luma sample by the full stamp amount, flipping direction when
/// the bright side would clip.
fn stamp_value(v: u8, offset: u8) -> u8 {
    let up = u16::from(v) + u16::from(offset);
    if up <= 255 {
        up as u8
    } else {
        v.saturating_sub(offset)
    }
}

fn stamp_foreground(spec: &SynthSpec, luma: &mut [u8], labels: &mut [bool], rng: &mut SplitMix64) {
    let (w, h) = (spec.width, spec.height);
    let target = (spec.fg_coverage * (w * h) as f64).round() as usize;
    let mut stamped = 0usize;
    let mut attempts = 0usize;
    while stamped < target && attempts < 1_000_000 {
        attempts += 1;
        let (bw, bh) = match spec.foreground {
            ForegroundKind::RectTextStrokes => {
                let thickness = 1 + rng.below(3);
                let length = 4 + rng.below(13);
                if rng.next_u64() & 1 == 0 {
                    (length.min(w), thickness.min(h))
                } else {
                    (thickness.min(w), length.min(h))
                }
            }
            ForegroundKind::Lines => {
                if rng.next_u64() & 1 == 0 {
                    (w, 1)
                } else {
                    (1, h)
                }
            }
        };
        let x0 = rng.below(w - bw + 1);
        let y0 = rng.below(h - bh + 1);
        for y in y0..y0 + bh {
            for x in x0..x0 + bw {
                let i = y * w + x;
                if !labels[i] {
                    labels[i] = true;
                    luma[i] = stamp_value(luma[i], spec.fg_luma_offset);
                    stamped += 1;
                }
            }
        }
    }
}
