//! Reference segmenters used for comparison runs.
//!
//! `djvu_segment` reimplements hierarchical 2-means color clustering: blocks
//! are clustered at the largest size first and the resulting centroids seed
//! the next smaller size, down to 8x8 where the final labels are assigned.
//! `spec_segment` reimplements a color-counting block classifier: 16x16
//! blocks with many distinct colors are treated as pictorial and scanned for
//! small constant-color shape primitives, the rest keep the most frequent
//! color (and anything close to it) as background.

use std::collections::BTreeMap;

use crate::config::SegConfig;
use crate::raster::{RgbImage, SegmentationMask, YCbCrImage};

/// Result of a single two-cluster Lloyd run.
#[derive(Debug, Clone)]
pub struct KMeans2Result {
    pub background_color: f64,
    pub foreground_color: f64,
    /// Per-pixel labels, `true` = assigned to the foreground centroid.
    pub assignment: Vec<bool>,
}

/// Standard Lloyd iterations with k = 2 until the assignment stops changing
/// or 50 iterations pass. Ties go to the background centroid; an emptied
/// cluster keeps its previous centroid.
pub fn kmeans2(values: &[f64], init_bg: f64, init_fg: f64) -> KMeans2Result {
    kmeans2_iters(values, init_bg, init_fg, 50).0
}

pub(crate) fn kmeans2_iters(
    values: &[f64],
    init_bg: f64,
    init_fg: f64,
    max_iters: usize,
) -> (KMeans2Result, Vec<f64>) {
    debug_assert!(!values.is_empty());
    debug_assert!(init_bg != init_fg);
    let mut bg = init_bg;
    let mut fg = init_fg;
    let mut assignment = vec![false; values.len()];
    let mut objectives = Vec::new();

    for _ in 0..max_iters {
        let mut changed = false;
        let mut objective = 0.0;
        for (i, &v) in values.iter().enumerate() {
            let db = (v - bg).abs();
            let df = (v - fg).abs();
            let to_fg = df < db;
            objective += if to_fg { df * df } else { db * db };
            if assignment[i] != to_fg {
                assignment[i] = to_fg;
                changed = true;
            }
        }
        objectives.push(objective);
        if !changed && objectives.len() > 1 {
            break;
        }
        let mut sums = [0.0f64; 2];
        let mut counts = [0usize; 2];
        for (&v, &a) in values.iter().zip(&assignment) {
            let c = usize::from(a);
            sums[c] += v;
            counts[c] += 1;
        }
        if counts[0] > 0 {
            bg = sums[0] / counts[0] as f64;
        }
        if counts[1] > 0 {
            fg = sums[1] / counts[1] as f64;
        }
    }

    (KMeans2Result { background_color: bg, foreground_color: fg, assignment }, objectives)
}

/// Luma samples of a block clipped to the image.
fn block_values(image: &YCbCrImage, x0: usize, y0: usize, size: usize) -> Vec<f64> {
    let xe = (x0 + size).min(image.width());
    let ye = (y0 + size).min(image.height());
    let mut values = Vec::with_capacity((xe - x0) * (ye - y0));
    for y in y0..ye {
        for x in x0..xe {
            values.push(f64::from(image.y.get(x, y)));
        }
    }
    values
}

/// Hierarchical 2-means segmentation. Block sizes run from
/// `cfg.block_size_max` down to `cfg.block_size_min`; each level's clusters
/// start from the parent block's centroids (top level: min/max luma of the
/// block). At the final level the centroid covering fewer pixels becomes the
/// foreground, ties broken toward the darker centroid.
pub fn djvu_segment(image: &YCbCrImage, cfg: &SegConfig) -> SegmentationMask {
    let (w, h) = (image.width(), image.height());
    let mut mask = SegmentationMask::background(w, h);
    if w == 0 || h == 0 {
        return mask;
    }

    let sizes = cfg.block_sizes();
    // centroids of the previous (coarser) level, indexed by block coords
    let mut parent: Vec<(f64, f64)> = Vec::new();
    let mut parent_bx = 0usize;

    for (level, &size) in sizes.iter().enumerate() {
        let bx = w.div_ceil(size);
        let by = h.div_ceil(size);
        let mut current = vec![(0.0, 0.0); bx * by];
        let last = level + 1 == sizes.len();

        for ty in 0..by {
            for tx in 0..bx {
                let values = block_values(image, tx * size, ty * size, size);
                let (init_bg, init_fg) = if level == 0 {
                    let max = values.iter().cloned().fold(f64::MIN, f64::max);
                    let min = values.iter().cloned().fold(f64::MAX, f64::min);
                    (max, min)
                } else {
                    parent[(ty / 2) * parent_bx + tx / 2]
                };

                if init_bg == init_fg {
                    // uniform ancestry: the whole block is one cluster
                    current[ty * bx + tx] = (init_bg, init_fg);
                    continue;
                }

                let result = kmeans2(&values, init_bg, init_fg);
                current[ty * bx + tx] = (result.background_color, result.foreground_color);

                if last {
                    write_final_labels(&mut mask, image, tx * size, ty * size, size, &result);
                }
            }
        }
        parent = current;
        parent_bx = bx;
    }
    mask
}

fn write_final_labels(
    mask: &mut SegmentationMask,
    image: &YCbCrImage,
    x0: usize,
    y0: usize,
    size: usize,
    result: &KMeans2Result,
) {
    let count_fg = result.assignment.iter().filter(|&&a| a).count();
    let count_bg = result.assignment.len() - count_fg;
    // the sparser cluster is the text; ties go to the darker centroid
    let fg_cluster_is_fg = match count_fg.cmp(&count_bg) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => result.foreground_color <= result.background_color,
    };
    let xe = (x0 + size).min(image.width());
    let ye = (y0 + size).min(image.height());
    let bw = xe - x0;
    for y in y0..ye {
        for x in x0..xe {
            let assigned_fg = result.assignment[(y - y0) * bw + (x - x0)];
            mask.set(x, y, assigned_fg == fg_cluster_is_fg);
        }
    }
}

/// Tunables of the color-counting baseline. The block size is fixed at
/// 16x16; the thresholds are reimplementation choices exposed for tuning.
#[derive(Debug, Clone)]
pub struct SpecBaselineConfig {
    /// Distinct-color count above which a block is treated as pictorial.
    pub color_threshold: usize,
    /// Largest primitive (in pixels) still considered foreground in
    /// pictorial blocks.
    pub primitive_max_size: usize,
}

impl Default for SpecBaselineConfig {
    fn default() -> Self {
        Self { color_threshold: 32, primitive_max_size: 50 }
    }
}

const SPEC_BLOCK_SIZE: usize = 16;
/// Colors closer than this (Euclidean RGB) to the most frequent color count
/// as background in text/graphics blocks.
const SPEC_COLOR_DISTANCE: f64 = 10.0;

/// How a block is handled by the color-counting baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecBlockKind {
    Pictorial,
    TextGraphics,
}

fn block_color_histogram(rgb: &RgbImage, x0: usize, y0: usize) -> BTreeMap<[u8; 3], u32> {
    let xe = (x0 + SPEC_BLOCK_SIZE).min(rgb.width());
    let ye = (y0 + SPEC_BLOCK_SIZE).min(rgb.height());
    let mut histogram = BTreeMap::new();
    for y in y0..ye {
        for x in x0..xe {
            *histogram.entry(rgb.get(x, y)).or_insert(0) += 1;
        }
    }
    histogram
}

/// Classifies the 16x16 block at (x0, y0) by its distinct color count.
pub fn spec_block_kind(
    rgb: &RgbImage,
    x0: usize,
    y0: usize,
    cfg: &SpecBaselineConfig,
) -> SpecBlockKind {
    if block_color_histogram(rgb, x0, y0).len() > cfg.color_threshold {
        SpecBlockKind::Pictorial
    } else {
        SpecBlockKind::TextGraphics
    }
}

fn color_distance(a: [u8; 3], b: [u8; 3]) -> f64 {
    let dr = f64::from(a[0]) - f64::from(b[0]);
    let dg = f64::from(a[1]) - f64::from(b[1]);
    let db = f64::from(a[2]) - f64::from(b[2]);
    (dr * dr + dg * dg + db * db).sqrt()
}

/// Color-counting segmentation over fixed 16x16 blocks.
pub fn spec_segment(rgb: &RgbImage, cfg: &SpecBaselineConfig) -> SegmentationMask {
    let (w, h) = (rgb.width(), rgb.height());
    let mut mask = SegmentationMask::background(w, h);
    let mut y0 = 0;
    while y0 < h {
        let mut x0 = 0;
        while x0 < w {
            segment_spec_block(rgb, x0, y0, cfg, &mut mask);
            x0 += SPEC_BLOCK_SIZE;
        }
        y0 += SPEC_BLOCK_SIZE;
    }
    mask
}

fn segment_spec_block(
    rgb: &RgbImage,
    x0: usize,
    y0: usize,
    cfg: &SpecBaselineConfig,
    mask: &mut SegmentationMask,
) {
    let xe = (x0 + SPEC_BLOCK_SIZE).min(rgb.width());
    let ye = (y0 + SPEC_BLOCK_SIZE).min(rgb.height());
    let histogram = block_color_histogram(rgb, x0, y0);

    if histogram.len() > cfg.color_threshold {
        // pictorial block: only small constant-color primitives are text
        for y in y0..ye {
            for x in x0..xe {
                let size = largest_primitive(rgb, x0, y0, xe, ye, x, y);
                mask.set(x, y, size <= cfg.primitive_max_size);
            }
        }
    } else {
        // text/graphics block: most frequent color and anything near it is
        // background (ties on the count go to the smallest RGB triple)
        let (&mfc, _) = histogram
            .iter()
            .max_by(|(ca, na), (cb, nb)| na.cmp(nb).then(cb.cmp(ca)))
            .expect("block is nonempty");
        for y in y0..ye {
            for x in x0..xe {
                let fg = color_distance(rgb.get(x, y), mfc) >= SPEC_COLOR_DISTANCE;
                mask.set(x, y, fg);
            }
        }
    }
}

/// Size in pixels of the largest constant-color primitive (horizontal or
/// vertical segment, or rectangle grown from the pixel's horizontal run)
/// containing the pixel, all within the block.
fn largest_primitive(
    rgb: &RgbImage,
    x0: usize,
    y0: usize,
    xe: usize,
    ye: usize,
    px: usize,
    py: usize,
) -> usize {
    let color = rgb.get(px, py);

    // maximal horizontal run through the pixel
    let mut run_x0 = px;
    while run_x0 > x0 && rgb.get(run_x0 - 1, py) == color {
        run_x0 -= 1;
    }
    let mut run_x1 = px;
    while run_x1 + 1 < xe && rgb.get(run_x1 + 1, py) == color {
        run_x1 += 1;
    }

    // maximal vertical run
    let mut run_y0 = py;
    while run_y0 > y0 && rgb.get(px, run_y0 - 1) == color {
        run_y0 -= 1;
    }
    let mut run_y1 = py;
    while run_y1 + 1 < ye && rgb.get(px, run_y1 + 1) == color {
        run_y1 += 1;
    }
    let vertical = run_y1 - run_y0 + 1;

    // rectangle: extend the horizontal span over adjacent uniform rows
    let span_uniform = |row: usize| (run_x0..=run_x1).all(|x| rgb.get(x, row) == color);
    let mut rect_y0 = py;
    while rect_y0 > y0 && span_uniform(rect_y0 - 1) {
        rect_y0 -= 1;
    }
    let mut rect_y1 = py;
    while rect_y1 + 1 < ye && span_uniform(rect_y1 + 1) {
        rect_y1 += 1;
    }
    let rect = (run_x1 - run_x0 + 1) * (rect_y1 - rect_y0 + 1);

    vertical.max(rect)
}
