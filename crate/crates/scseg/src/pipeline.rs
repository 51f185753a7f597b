//! The hierarchical block segmentation pipeline.
//!
//! Each top-level tile runs a four-step decision per block:
//!
//! 1. completely flat blocks are labeled from neighboring blocks' background
//!    colors (within eps2),
//! 2. blocks a least-squares smooth fit explains to within eps3 everywhere
//!    become background outright,
//! 3. otherwise the robust LAD fit labels pixels by residual against eps1,
//!    accepted when the background fraction exceeds eps4,
//! 4. otherwise the block splits into four quadrants, recursing down to the
//!    minimum block size where the LAD labeling is always accepted.
//!
//! After a tile's luma decision is stitched, an optional chroma pass re-fits
//! Cb and Cr on the detected background pixels and reclassifies background
//! pixels whose chroma residual exceeds eps1.
//!
//! Tiles are processed in raster order; each tile only ever consults already
//! labeled pixels to its left/top, which admits wavefront parallelism whose
//! output is bit-identical to the sequential pass.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::config::SegConfig;
use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::linalg;
use crate::raster::{
    vectorize_block, vectorize_block_replicated, BlockRegion, PixelPlane, SegmentationMask,
    YCbCrImage,
};
use crate::solver::{lad_fit_admm, least_squares_fit, SmoothModel};

/// Background colors of the causal neighbor blocks (left, top, top-left,
/// top-right), present only when the neighbor has labeled background pixels.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NeighborContext {
    pub left: Option<u8>,
    pub top: Option<u8>,
    pub top_left: Option<u8>,
    pub top_right: Option<u8>,
}

impl NeighborContext {
    pub fn background_colors(&self) -> impl Iterator<Item = u8> + '_ {
        [self.left, self.top, self.top_left, self.top_right].into_iter().flatten()
    }

    pub fn has_background_color(&self) -> bool {
        self.background_colors().next().is_some()
    }
}

/// Which rule settled a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DecisionKind {
    FlatBackground,
    FlatForeground,
    SmoothBackground,
    LadClassified,
    Subdivided,
}

/// Outcome of segmenting one block region.
#[derive(Debug, Clone)]
pub struct BlockDecision {
    pub kind: DecisionKind,
    /// Labels over the region, row-major, `true` = foreground.
    pub mask: SegmentationMask,
    pub background_fraction: f64,
}

/// Counters describing which rules fired at which block sizes.
#[derive(Debug, Clone, Default)]
pub struct SegStats {
    /// (block size, decision) occurrence counts.
    pub decision_counts: BTreeMap<(usize, DecisionKind), u64>,
    /// Whole-block least-squares fits attempted (step 2).
    pub smooth_fits: u64,
    /// Robust LAD classifications run (step 3).
    pub lad_fits: u64,
    /// Background pixels reclassified as foreground by the chroma pass.
    pub chroma_flips: u64,
    /// Tiles where chroma refinement was skipped (too few background pixels
    /// or a rank-deficient fit).
    pub chroma_skipped_blocks: u64,
}

impl SegStats {
    fn record(&mut self, size: usize, kind: DecisionKind) {
        *self.decision_counts.entry((size, kind)).or_insert(0) += 1;
    }

    fn merge(&mut self, other: &SegStats) {
        for (&key, &count) in &other.decision_counts {
            *self.decision_counts.entry(key).or_insert(0) += count;
        }
        self.smooth_fits += other.smooth_fits;
        self.lad_fits += other.lad_fits;
        self.chroma_flips += other.chroma_flips;
        self.chroma_skipped_blocks += other.chroma_skipped_blocks;
    }

    /// Total decisions of one kind across all block sizes.
    pub fn count_kind(&self, kind: DecisionKind) -> u64 {
        self.decision_counts.iter().filter(|((_, k), _)| *k == kind).map(|(_, c)| c).sum()
    }

    /// Block sizes at which any decision was recorded.
    pub fn block_sizes_decided(&self) -> Vec<usize> {
        let mut sizes: Vec<usize> = self.decision_counts.keys().map(|&(s, _)| s).collect();
        sizes.sort_unstable();
        sizes.dedup();
        sizes
    }
}

/// Returns the shared intensity iff every entry of the block equals it.
/// Inputs are vectorized 8-bit samples, so exact equality is meaningful.
pub fn check_flat(block: &[f64]) -> Option<u8> {
    let first = *block.first()?;
    if block.iter().all(|&v| v == first) {
        debug_assert!((0.0..=255.0).contains(&first) && first.fract() == 0.0);
        Some(first as u8)
    } else {
        None
    }
}

/// Flat-block rule: background iff some neighbor background color lies
/// within eps2 of the block color, or no neighbor has any background color
/// at all (an isolated flat block reads as blank page). Returns `true` for
/// background.
pub fn classify_flat(color: u8, ctx: &NeighborContext, eps2: f64) -> bool {
    let mut saw_any = false;
    for b in ctx.background_colors() {
        saw_any = true;
        if (f64::from(color) - f64::from(b)).abs() < eps2 {
            return true;
        }
    }
    !saw_any
}

/// Step-2 check: least-squares fit over all pixels; the model is returned
/// iff every absolute residual is below eps3.
pub fn try_smooth_background(
    block: &[f64],
    dict: &Dictionary,
    eps3: f64,
) -> Result<Option<SmoothModel>> {
    let fit = least_squares_fit(dict, block)?;
    let max_err = fit.residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    Ok((max_err < eps3).then_some(fit.model))
}

/// Step-3 classification: robust LAD fit, then per-pixel labels by residual
/// magnitude against eps1 (strict). Returns the block mask and the fraction
/// of background pixels.
pub fn lad_classify(
    block: &[f64],
    dict: &Dictionary,
    eps1: f64,
    rho: f64,
    iterations: usize,
) -> Result<(SegmentationMask, f64)> {
    let fit = lad_fit_admm(dict, block, rho, iterations)?;
    let n = dict.block_size();
    let mut labels = vec![false; n * n];
    let mut background = 0usize;
    for x in 0..n {
        for y in 0..n {
            if fit.residuals[x * n + y].abs() < eps1 {
                background += 1;
            } else {
                labels[y * n + x] = true;
            }
        }
    }
    let fraction = background as f64 / (n * n) as f64;
    Ok((SegmentationMask::new(n, n, labels)?, fraction))
}

struct Rect {
    x: usize,
    y: usize,
    w: usize,
    h: usize,
}

struct RegionSummary {
    kind: Option<DecisionKind>,
    background: u64,
    total: u64,
}

impl RegionSummary {
    fn empty() -> Self {
        Self { kind: None, background: 0, total: 0 }
    }
}

/// One top-level tile's working state: a read-only view of everything
/// committed by earlier tiles plus a private overlay for this tile.
struct TileJob<'a> {
    image: &'a YCbCrImage,
    cfg: &'a SegConfig,
    dicts: &'a BTreeMap<usize, Arc<Dictionary>>,
    committed_fg: &'a [bool],
    committed_labeled: &'a [bool],
    rect: Rect,
    local_fg: Vec<bool>,
    local_labeled: Vec<bool>,
    stats: SegStats,
}

struct TileResult {
    rect: Rect,
    fg: Vec<bool>,
    stats: SegStats,
}

impl<'a> TileJob<'a> {
    fn new(
        image: &'a YCbCrImage,
        cfg: &'a SegConfig,
        dicts: &'a BTreeMap<usize, Arc<Dictionary>>,
        committed_fg: &'a [bool],
        committed_labeled: &'a [bool],
        origin: (usize, usize),
    ) -> Self {
        let w = (image.width() - origin.0).min(cfg.block_size_max);
        let h = (image.height() - origin.1).min(cfg.block_size_max);
        let rect = Rect { x: origin.0, y: origin.1, w, h };
        Self {
            image,
            cfg,
            dicts,
            committed_fg,
            committed_labeled,
            local_fg: vec![false; w * h],
            local_labeled: vec![false; w * h],
            rect,
            stats: SegStats::default(),
        }
    }

    fn run(mut self, ctx_override: Option<&NeighborContext>) -> Result<TileResult> {
        let origin = (self.rect.x, self.rect.y);
        self.process_region(origin.0, origin.1, self.cfg.block_size_max, ctx_override)?;
        debug_assert!(self.local_labeled.iter().all(|&l| l));
        if self.cfg.enable_chroma_refine {
            self.refine_tile_chroma();
        }
        Ok(TileResult { rect: self.rect, fg: self.local_fg, stats: self.stats })
    }

    #[inline]
    fn in_rect(&self, x: usize, y: usize) -> bool {
        x >= self.rect.x
            && x < self.rect.x + self.rect.w
            && y >= self.rect.y
            && y < self.rect.y + self.rect.h
    }

    /// Label state of a pixel: `None` while unlabeled, else `Some(is_fg)`.
    fn pixel_state(&self, x: usize, y: usize) -> Option<bool> {
        if self.in_rect(x, y) {
            let i = (y - self.rect.y) * self.rect.w + (x - self.rect.x);
            self.local_labeled[i].then(|| self.local_fg[i])
        } else if self.committed_labeled.is_empty() {
            None
        } else {
            let i = y * self.image.width() + x;
            self.committed_labeled[i].then(|| self.committed_fg[i])
        }
    }

    /// Mean luma over labeled background pixels of a square region, clipped
    /// to the image; `None` when no such pixel exists.
    fn region_background_mean(&self, x0: i64, y0: i64, size: usize) -> Option<u8> {
        let w = self.image.width() as i64;
        let h = self.image.height() as i64;
        let xs = x0.max(0);
        let ys = y0.max(0);
        let xe = (x0 + size as i64).min(w);
        let ye = (y0 + size as i64).min(h);
        if xs >= xe || ys >= ye {
            return None;
        }
        let mut sum = 0u64;
        let mut count = 0u64;
        for y in ys..ye {
            for x in xs..xe {
                if self.pixel_state(x as usize, y as usize) == Some(false) {
                    sum += u64::from(self.image.y.get(x as usize, y as usize));
                    count += 1;
                }
            }
        }
        (count > 0).then(|| (sum as f64 / count as f64).round() as u8)
    }

    /// Background colors of the four causal same-size neighbor regions.
    fn neighbor_context(&self, x0: usize, y0: usize, size: usize) -> NeighborContext {
        let (x, y, s) = (x0 as i64, y0 as i64, size as i64);
        NeighborContext {
            left: self.region_background_mean(x - s, y, size),
            top: self.region_background_mean(x, y - s, size),
            top_left: self.region_background_mean(x - s, y - s, size),
            top_right: self.region_background_mean(x + s, y - s, size),
        }
    }

    fn commit_uniform(
        &mut self,
        x0: usize,
        y0: usize,
        size: usize,
        foreground: bool,
    ) -> (u64, u64) {
        let mut total = 0u64;
        for ly in 0..size {
            for lx in 0..size {
                let (x, y) = (x0 + lx, y0 + ly);
                if x < self.image.width() && y < self.image.height() {
                    let i = (y - self.rect.y) * self.rect.w + (x - self.rect.x);
                    self.local_fg[i] = foreground;
                    self.local_labeled[i] = true;
                    total += 1;
                }
            }
        }
        (if foreground { 0 } else { total }, total)
    }

    fn commit_mask(&mut self, x0: usize, y0: usize, mask: &SegmentationMask) -> (u64, u64) {
        let mut total = 0u64;
        let mut background = 0u64;
        for ly in 0..mask.height() {
            for lx in 0..mask.width() {
                let (x, y) = (x0 + lx, y0 + ly);
                if x < self.image.width() && y < self.image.height() {
                    let fg = mask.is_foreground(lx, ly);
                    let i = (y - self.rect.y) * self.rect.w + (x - self.rect.x);
                    self.local_fg[i] = fg;
                    self.local_labeled[i] = true;
                    total += 1;
                    if !fg {
                        background += 1;
                    }
                }
            }
        }
        (background, total)
    }

    fn process_region(
        &mut self,
        x0: usize,
        y0: usize,
        size: usize,
        ctx_override: Option<&NeighborContext>,
    ) -> Result<RegionSummary> {
        if x0 >= self.image.width() || y0 >= self.image.height() {
            return Ok(RegionSummary::empty());
        }
        let fully_inside = x0 + size <= self.image.width() && y0 + size <= self.image.height();
        if fully_inside {
            let block = vectorize_block(&self.image.y, BlockRegion::new(x0, y0, size))?;
            return self.decide_block(x0, y0, size, &block, ctx_override);
        }
        if size > self.cfg.block_size_min {
            // Partial tiles are covered by smaller power-of-two sub-blocks.
            self.stats.record(size, DecisionKind::Subdivided);
            let summary = self.subdivide(x0, y0, size)?;
            return Ok(summary);
        }
        // Minimum-size block straddling the image edge: pad by edge
        // replication for the fit and discard the padded labels.
        let block = vectorize_block_replicated(&self.image.y, BlockRegion::new(x0, y0, size));
        self.decide_block(x0, y0, size, &block, ctx_override)
    }

    fn subdivide(&mut self, x0: usize, y0: usize, size: usize) -> Result<RegionSummary> {
        let half = size / 2;
        let mut background = 0u64;
        let mut total = 0u64;
        for (dx, dy) in [(0, 0), (half, 0), (0, half), (half, half)] {
            let child = self.process_region(x0 + dx, y0 + dy, half, None)?;
            background += child.background;
            total += child.total;
        }
        Ok(RegionSummary { kind: Some(DecisionKind::Subdivided), background, total })
    }

    fn decide_block(
        &mut self,
        x0: usize,
        y0: usize,
        size: usize,
        block: &[f64],
        ctx_override: Option<&NeighborContext>,
    ) -> Result<RegionSummary> {
        // step 1: completely flat block
        if let Some(color) = check_flat(block) {
            let ctx = match ctx_override {
                Some(ctx) => *ctx,
                None => self.neighbor_context(x0, y0, size),
            };
            let is_background = classify_flat(color, &ctx, self.cfg.eps2);
            let kind = if is_background {
                DecisionKind::FlatBackground
            } else {
                DecisionKind::FlatForeground
            };
            self.stats.record(size, kind);
            let (background, total) = self.commit_uniform(x0, y0, size, !is_background);
            return Ok(RegionSummary { kind: Some(kind), background, total });
        }

        let dict = &self.dicts[&size];

        // step 2: smooth background without foreground
        self.stats.smooth_fits += 1;
        if try_smooth_background(block, dict, self.cfg.eps3)?.is_some() {
            self.stats.record(size, DecisionKind::SmoothBackground);
            let (background, total) = self.commit_uniform(x0, y0, size, false);
            return Ok(RegionSummary {
                kind: Some(DecisionKind::SmoothBackground),
                background,
                total,
            });
        }

        // step 3: robust fit and per-pixel classification
        self.stats.lad_fits += 1;
        let (mask, fraction) =
            lad_classify(block, dict, self.cfg.eps1, self.cfg.rho, self.cfg.admm_iterations)?;
        if fraction > self.cfg.eps4 || size == self.cfg.block_size_min {
            self.stats.record(size, DecisionKind::LadClassified);
            let (background, total) = self.commit_mask(x0, y0, &mask);
            return Ok(RegionSummary {
                kind: Some(DecisionKind::LadClassified),
                background,
                total,
            });
        }

        // step 4: too little background explained, split into quadrants
        self.stats.record(size, DecisionKind::Subdivided);
        self.subdivide(x0, y0, size)
    }

    /// Chroma refinement over the whole (possibly clipped) tile.
    fn refine_tile_chroma(&mut self) {
        let dict = &self.dicts[&self.cfg.block_size_max];
        let origin = (self.rect.x, self.rect.y);
        let flips = refine_block_chroma(
            &self.image.cb,
            &self.image.cr,
            origin,
            dict,
            self.cfg.eps1,
            &|x, y| self.pixel_state(x, y) == Some(false),
        );
        match flips {
            None => self.stats.chroma_skipped_blocks += 1,
            Some(flips) => {
                self.stats.chroma_flips += flips.len() as u64;
                for (x, y) in flips {
                    let i = (y - self.rect.y) * self.rect.w + (x - self.rect.x);
                    self.local_fg[i] = true;
                }
            }
        }
    }
}

/// Least-squares chroma fit on the background pixels of one block region;
/// returns the background pixels whose Cb or Cr residual exceeds eps1, or
/// `None` when the fit is skipped (fewer background pixels than basis
/// functions, or a rank-deficient system).
fn refine_block_chroma(
    cb: &PixelPlane,
    cr: &PixelPlane,
    origin: (usize, usize),
    dict: &Dictionary,
    eps1: f64,
    is_background: &dyn Fn(usize, usize) -> bool,
) -> Option<Vec<(usize, usize)>> {
    let n = dict.block_size();
    let k = dict.num_bases();
    let (w, h) = (cb.width(), cb.height());

    let mut rows: Vec<(usize, usize, usize)> = Vec::new();
    for lx in 0..n {
        for ly in 0..n {
            let (x, y) = (origin.0 + lx, origin.1 + ly);
            if x < w && y < h && is_background(x, y) {
                rows.push((lx * n + ly, x, y));
            }
        }
    }
    if rows.len() < k {
        return None;
    }

    // masked normal equations, shared Gram matrix for both chroma planes
    let mut gram = vec![0.0; k * k];
    let mut rhs_cb = vec![0.0; k];
    let mut rhs_cr = vec![0.0; k];
    for &(i, x, y) in &rows {
        let basis = dict.row(i);
        let vcb = f64::from(cb.get(x, y));
        let vcr = f64::from(cr.get(x, y));
        for p in 0..k {
            rhs_cb[p] += basis[p] * vcb;
            rhs_cr[p] += basis[p] * vcr;
            for q in 0..k {
                gram[p * k + q] += basis[p] * basis[q];
            }
        }
    }
    if !linalg::cholesky_decompose(&mut gram, k) {
        return None;
    }
    linalg::cholesky_solve(&gram, k, &mut rhs_cb);
    linalg::cholesky_solve(&gram, k, &mut rhs_cr);

    let mut flips = Vec::new();
    for &(i, x, y) in &rows {
        let basis = dict.row(i);
        let mut fit_cb = 0.0;
        let mut fit_cr = 0.0;
        for p in 0..k {
            fit_cb += basis[p] * rhs_cb[p];
            fit_cr += basis[p] * rhs_cr[p];
        }
        let res_cb = f64::from(cb.get(x, y)) - fit_cb;
        let res_cr = f64::from(cr.get(x, y)) - fit_cr;
        if res_cb.abs() > eps1 || res_cr.abs() > eps1 {
            flips.push((x, y));
        }
    }
    Some(flips)
}

/// Chroma refinement of one block region against an image-sized mask:
/// background pixels whose masked chroma fit misses by more than eps1 in
/// either plane become foreground. Foreground pixels are never relabeled.
pub fn chroma_refine(
    image: &YCbCrImage,
    region: BlockRegion,
    mask: &SegmentationMask,
    dict: &Dictionary,
    eps1: f64,
) -> Result<SegmentationMask> {
    if mask.width() != image.width() || mask.height() != image.height() {
        return Err(Error::dims(
            "chroma_refine mask",
            image.width() * image.height(),
            mask.width() * mask.height(),
        ));
    }
    if region.size != dict.block_size() {
        return Err(Error::InvalidArgument(format!(
            "region size {} does not match dictionary block size {}",
            region.size,
            dict.block_size()
        )));
    }
    let mut out = mask.clone();
    let flips =
        refine_block_chroma(&image.cb, &image.cr, (region.x0, region.y0), dict, eps1, &|x, y| {
            !mask.is_foreground(x, y)
        });
    if let Some(flips) = flips {
        for (x, y) in flips {
            out.set(x, y, true);
        }
    }
    Ok(out)
}

fn build_dictionaries(cfg: &SegConfig) -> Result<BTreeMap<usize, Arc<Dictionary>>> {
    cfg.block_sizes().into_iter().map(|s| Ok((s, Dictionary::cached(s, cfg.num_bases)?))).collect()
}

/// Segments one block with an explicitly supplied neighbor context. The
/// region must lie inside the image and its size must be a power of two in
/// `[block_size_min, block_size_max]`. Sub-blocks created by recursion take
/// their context from labels already placed within the region.
pub fn segment_block(
    image: &YCbCrImage,
    region: BlockRegion,
    ctx: &NeighborContext,
    cfg: &SegConfig,
) -> Result<BlockDecision> {
    cfg.validate()?;
    if !region.size.is_power_of_two()
        || region.size < cfg.block_size_min
        || region.size > cfg.block_size_max
    {
        return Err(Error::InvalidArgument(format!(
            "block size {} outside configured range {}..={}",
            region.size, cfg.block_size_min, cfg.block_size_max
        )));
    }
    if !region.fits_in(image.width(), image.height()) {
        return Err(Error::RegionOutOfBounds {
            x0: region.x0,
            y0: region.y0,
            size: region.size,
            width: image.width(),
            height: image.height(),
        });
    }
    let cfg_for_region = SegConfig { block_size_max: region.size, ..cfg.clone() };
    let dicts = build_dictionaries(&cfg_for_region)?;
    let mut job = TileJob::new(image, &cfg_for_region, &dicts, &[], &[], (region.x0, region.y0));
    let summary = job.process_region(region.x0, region.y0, region.size, Some(ctx))?;
    let kind = summary.kind.expect("in-image region always yields a decision");
    let mask = SegmentationMask::new(region.size, region.size, job.local_fg)?;
    let background_fraction = summary.background as f64 / summary.total.max(1) as f64;
    Ok(BlockDecision { kind, mask, background_fraction })
}

fn wavefront_tiles(tiles_x: usize, tiles_y: usize) -> Vec<Vec<(usize, usize)>> {
    // Tile (tx, ty) depends on its left, top, top-left, and top-right
    // neighbors; every dependency of a tile on wave 2*ty + tx lies on a
    // strictly earlier wave.
    let max_wave = 2 * (tiles_y - 1) + (tiles_x - 1);
    let mut waves = vec![Vec::new(); max_wave + 1];
    for ty in 0..tiles_y {
        for tx in 0..tiles_x {
            waves[2 * ty + tx].push((tx, ty));
        }
    }
    waves
}

fn segment_image_impl(
    image: &YCbCrImage,
    cfg: &SegConfig,
    threads: usize,
) -> Result<(SegmentationMask, SegStats)> {
    cfg.validate()?;
    if image.width() == 0 || image.height() == 0 {
        return Err(Error::InvalidArgument("cannot segment an empty image".into()));
    }
    let dicts = build_dictionaries(cfg)?;
    let (w, h) = (image.width(), image.height());
    let tiles_x = w.div_ceil(cfg.block_size_max);
    let tiles_y = h.div_ceil(cfg.block_size_max);

    let mut fg = vec![false; w * h];
    let mut labeled = vec![false; w * h];
    let mut stats = SegStats::default();

    let pool = if threads > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?,
        )
    } else {
        None
    };

    for wave in wavefront_tiles(tiles_x, tiles_y) {
        let jobs: Vec<TileJob> = wave
            .iter()
            .map(|&(tx, ty)| {
                TileJob::new(
                    image,
                    cfg,
                    &dicts,
                    &fg,
                    &labeled,
                    (tx * cfg.block_size_max, ty * cfg.block_size_max),
                )
            })
            .collect();
        let results: Result<Vec<TileResult>> = match &pool {
            Some(pool) => pool.install(|| jobs.into_par_iter().map(|j| j.run(None)).collect()),
            None => jobs.into_iter().map(|j| j.run(None)).collect(),
        };
        for result in results? {
            for ly in 0..result.rect.h {
                let src = ly * result.rect.w;
                let dst = (result.rect.y + ly) * w + result.rect.x;
                fg[dst..dst + result.rect.w].copy_from_slice(&result.fg[src..src + result.rect.w]);
                labeled[dst..dst + result.rect.w].fill(true);
            }
            stats.merge(&result.stats);
        }
    }
    debug_assert!(labeled.iter().all(|&l| l), "every pixel must be labeled exactly once");

    Ok((SegmentationMask::new(w, h, fg)?, stats))
}

/// Segments a whole image with the sequential reference schedule.
pub fn segment_image(image: &YCbCrImage, cfg: &SegConfig) -> Result<SegmentationMask> {
    Ok(segment_image_impl(image, cfg, 1)?.0)
}

/// Like [`segment_image`], also returning decision telemetry.
pub fn segment_image_with_stats(
    image: &YCbCrImage,
    cfg: &SegConfig,
) -> Result<(SegmentationMask, SegStats)> {
    segment_image_impl(image, cfg, 1)
}

/// Segments with `threads` workers processing tiles along anti-diagonal
/// wavefronts. The result is bit-identical to [`segment_image`] for any
/// thread count.
pub fn segment_image_threads(
    image: &YCbCrImage,
    cfg: &SegConfig,
    threads: usize,
) -> Result<SegmentationMask> {
    if threads == 0 {
        return Err(Error::InvalidArgument("threads must be >= 1".into()));
    }
    Ok(segment_image_impl(image, cfg, threads)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dict8() -> Arc<Dictionary> {
        Dictionary::cached(8, 10).unwrap()
    }

    fn dict64() -> Arc<Dictionary> {
        Dictionary::cached(64, 10).unwrap()
    }

    #[test]
    fn check_flat_detects_constant_blocks() {
        assert_eq!(check_flat(&[200.0; 64]), Some(200));
        let mut almost = vec![200.0; 63];
        almost.push(201.0);
        assert_eq!(check_flat(&almost), None);
        assert_eq!(check_flat(&[0.0]), Some(0));
    }

    #[test]
    fn classify_flat_matches_close_neighbor() {
        let ctx = NeighborContext { left: Some(95), ..Default::default() };
        assert!(classify_flat(100, &ctx, 10.0)); // |100 - 95| = 5 < 10
    }

    #[test]
    fn classify_flat_rejects_distant_neighbor() {
        let ctx = NeighborContext { left: Some(150), ..Default::default() };
        assert!(!classify_flat(100, &ctx, 10.0)); // 50 >= 10
    }

    #[test]
    fn classify_flat_without_neighbors_is_background() {
        assert!(classify_flat(100, &NeighborContext::default(), 10.0));
    }

    #[test]
    fn classify_flat_threshold_is_strict() {
        let ctx = NeighborContext { top: Some(110), ..Default::default() };
        assert!(!classify_flat(100, &ctx, 10.0)); // exactly eps2 away
    }

    #[test]
    fn smooth_background_accepts_representable_block() {
        let dict = dict8();
        let alpha: Vec<f64> = (0..10).map(|k| if k == 0 { 800.0 } else { 10.0 }).collect();
        let f = dict.synthesize(&alpha);
        let model = try_smooth_background(&f, &dict, 3.0).unwrap();
        assert!(model.is_some());
    }

    #[test]
    fn smooth_background_rejects_single_spike() {
        let dict = dict8();
        let alpha: Vec<f64> = (0..10).map(|k| if k == 0 { 800.0 } else { 10.0 }).collect();
        let mut f = dict.synthesize(&alpha);
        f[20] += 50.0;
        assert!(try_smooth_background(&f, &dict, 3.0).unwrap().is_none());
    }

    #[test]
    fn smooth_background_accepts_constant_block() {
        let dict = dict8();
        assert!(try_smooth_background(&[80.0; 64], &dict, 3.0).unwrap().is_some());
    }

    #[test]
    fn lad_classify_exact_block_is_all_background() {
        let dict = dict8();
        let alpha: Vec<f64> = (0..10).map(|k| 500.0 - 30.0 * k as f64).collect();
        let f = dict.synthesize(&alpha);
        let (mask, fraction) = lad_classify(&f, &dict, 10.0, 1.0, 200).unwrap();
        assert_eq!(fraction, 1.0);
        assert_eq!(mask.foreground_count(), 0);
    }

    #[test]
    fn lad_classify_flags_exactly_the_offset_pixels() {
        let dict = dict8();
        let alpha: Vec<f64> = (0..10).map(|k| if k == 0 { 900.0 } else { -8.0 }).collect();
        let mut f = dict.synthesize(&alpha);
        let offsets = [5usize, 17, 40]; // ~5% of 64
        for &i in &offsets {
            f[i] += 100.0;
        }
        let (mask, fraction) = lad_classify(&f, &dict, 10.0, 1.0, 200).unwrap();
        assert!((fraction - (64.0 - 3.0) / 64.0).abs() < 1e-12);
        for x in 0..8 {
            for y in 0..8 {
                let expected = offsets.contains(&(x * 8 + y));
                assert_eq!(mask.is_foreground(x, y), expected, "pixel col {x} row {y}");
            }
        }
    }

    #[test]
    fn lad_classify_checkerboard_has_frozen_background_fraction() {
        // Nyquist checkerboard is orthogonal to every low-frequency basis;
        // the fit stays near the flat 127.5 level and every residual is far
        // beyond eps1. Regression-pinned output of the fixed solver.
        let dict = dict8();
        let f: Vec<f64> = (0..64)
            .map(|i| {
                let (x, y) = (i / 8, i % 8);
                if (x + y) % 2 == 0 {
                    0.0
                } else {
                    255.0
                }
            })
            .collect();
        let (mask, fraction) = lad_classify(&f, &dict, 10.0, 1.0, 200).unwrap();
        assert_eq!(fraction, 0.0);
        assert_eq!(mask.foreground_count(), 64);
    }

    fn flat_image(width: usize, height: usize, value: u8) -> YCbCrImage {
        YCbCrImage::from_luma(PixelPlane::filled(width, height, value))
    }

    #[test]
    fn segment_block_flat_with_matching_neighbor_is_flat_background() {
        let image = flat_image(64, 64, 120);
        let ctx = NeighborContext { left: Some(118), ..Default::default() };
        let decision =
            segment_block(&image, BlockRegion::new(0, 0, 64), &ctx, &SegConfig::default()).unwrap();
        assert_eq!(decision.kind, DecisionKind::FlatBackground);
        assert_eq!(decision.background_fraction, 1.0);
        assert_eq!(decision.mask.foreground_count(), 0);
    }

    #[test]
    fn segment_block_flat_with_distant_neighbor_is_flat_foreground() {
        let image = flat_image(64, 64, 200);
        let ctx = NeighborContext { left: Some(100), top: Some(90), ..Default::default() };
        let decision =
            segment_block(&image, BlockRegion::new(0, 0, 64), &ctx, &SegConfig::default()).unwrap();
        assert_eq!(decision.kind, DecisionKind::FlatForeground);
        assert_eq!(decision.background_fraction, 0.0);
        assert_eq!(decision.mask.foreground_count(), 64 * 64);
    }

    /// Smooth 64x64 background with strokes stamped at +120 luma.
    fn stroked_block() -> (YCbCrImage, Vec<(usize, usize)>) {
        let dict = dict64();
        let mut alpha = vec![0.0; 10];
        alpha[0] = 100.0 * 64.0; // mean luma 100
        alpha[1] = 30.0;
        alpha[2] = -22.0;
        alpha[4] = 14.0;
        let smooth = dict.synthesize(&alpha);
        let mut strokes = Vec::new();
        // vertical strokes, 2px wide, covering ~10% of the block
        for sx in [10usize, 30, 50] {
            for y in 5..50 {
                strokes.push((sx, y));
                strokes.push((sx + 1, y));
            }
        }
        let luma = PixelPlane::from_fn(64, 64, |x, y| {
            let base = smooth[x * 64 + y].round();
            if strokes.contains(&(x, y)) {
                (base + 120.0).clamp(0.0, 255.0) as u8
            } else {
                base.clamp(0.0, 255.0) as u8
            }
        });
        (YCbCrImage::from_luma(luma), strokes)
    }

    #[test]
    fn segment_block_labels_strokes_over_smooth_background() {
        let (image, strokes) = stroked_block();
        let decision = segment_block(
            &image,
            BlockRegion::new(0, 0, 64),
            &NeighborContext::default(),
            &SegConfig::default(),
        )
        .unwrap();
        assert_eq!(decision.kind, DecisionKind::LadClassified);
        // accepted without subdividing, so more than eps4 must be background
        assert!(decision.background_fraction > 0.5);
        for x in 0..64 {
            for y in 0..64 {
                let expected = strokes.contains(&(x, y));
                assert_eq!(decision.mask.is_foreground(x, y), expected, "pixel ({x},{y})");
            }
        }
    }

    #[test]
    fn segment_block_smooth_gradient_is_smooth_background() {
        let dict = dict64();
        let mut alpha = vec![0.0; 10];
        alpha[0] = 120.0 * 64.0;
        alpha[1] = 35.0;
        alpha[3] = -18.0;
        let smooth = dict.synthesize(&alpha);
        let luma =
            PixelPlane::from_fn(64, 64, |x, y| smooth[x * 64 + y].round().clamp(0.0, 255.0) as u8);
        let image = YCbCrImage::from_luma(luma);
        let decision = segment_block(
            &image,
            BlockRegion::new(0, 0, 64),
            &NeighborContext::default(),
            &SegConfig::default(),
        )
        .unwrap();
        assert_eq!(decision.kind, DecisionKind::SmoothBackground);
        assert_eq!(decision.mask.foreground_count(), 0);
        assert_eq!(decision.background_fraction, 1.0);
    }

    #[test]
    fn segment_block_subdivides_checkerboard() {
        let luma = PixelPlane::from_fn(64, 64, |x, y| if (x + y) % 2 == 0 { 0 } else { 255 });
        let image = YCbCrImage::from_luma(luma);
        let decision = segment_block(
            &image,
            BlockRegion::new(0, 0, 64),
            &NeighborContext::default(),
            &SegConfig::default(),
        )
        .unwrap();
        assert_eq!(decision.kind, DecisionKind::Subdivided);
    }

    #[test]
    fn segment_block_rejects_out_of_range_sizes() {
        let image = flat_image(64, 64, 10);
        let cfg = SegConfig::default();
        let ctx = NeighborContext::default();
        assert!(segment_block(&image, BlockRegion::new(0, 0, 4), &ctx, &cfg).is_err());
        assert!(segment_block(&image, BlockRegion::new(32, 32, 64), &ctx, &cfg).is_err());
    }

    #[test]
    fn chroma_refine_leaves_constant_chroma_unchanged() {
        let image = flat_image(64, 64, 120);
        let mask = SegmentationMask::background(64, 64);
        let refined =
            chroma_refine(&image, BlockRegion::new(0, 0, 64), &mask, &dict64(), 10.0).unwrap();
        assert_eq!(refined, mask);
    }

    #[test]
    fn chroma_refine_flags_chroma_blob_and_is_idempotent() {
        let y = PixelPlane::filled(64, 64, 120);
        let blob: Vec<(usize, usize)> = (0..10).map(|i| (20 + i % 5, 30 + i / 5)).collect();
        let cb = PixelPlane::from_fn(64, 64, |x, y| if blob.contains(&(x, y)) { 208 } else { 128 });
        let cr = PixelPlane::filled(64, 64, 128);
        let image = YCbCrImage::new(y, cb, cr).unwrap();
        let mask = SegmentationMask::background(64, 64);
        let region = BlockRegion::new(0, 0, 64);
        let refined = chroma_refine(&image, region, &mask, &dict64(), 10.0).unwrap();
        for &(x, y) in &blob {
            assert!(refined.is_foreground(x, y), "blob pixel ({x},{y}) not flagged");
        }
        assert_eq!(refined.foreground_count(), blob.len());
        let twice = chroma_refine(&image, region, &refined, &dict64(), 10.0).unwrap();
        assert_eq!(twice, refined);
    }

    #[test]
    fn chroma_refine_skips_all_foreground_mask() {
        let image = flat_image(64, 64, 120);
        let mask = SegmentationMask::new(64, 64, vec![true; 64 * 64]).unwrap();
        let refined =
            chroma_refine(&image, BlockRegion::new(0, 0, 64), &mask, &dict64(), 10.0).unwrap();
        assert_eq!(refined, mask);
    }

    #[test]
    fn chroma_refine_never_relabels_foreground_to_background() {
        let image = flat_image(64, 64, 120);
        let mut labels = vec![false; 64 * 64];
        labels[5] = true;
        labels[100] = true;
        let mask = SegmentationMask::new(64, 64, labels).unwrap();
        let refined =
            chroma_refine(&image, BlockRegion::new(0, 0, 64), &mask, &dict64(), 10.0).unwrap();
        assert!(refined.is_foreground(5, 0));
        assert!(refined.is_foreground(36, 1));
    }

    #[test]
    fn segment_image_uniform_is_all_background() {
        let image = flat_image(128, 128, 128);
        let (mask, stats) = segment_image_with_stats(&image, &SegConfig::default()).unwrap();
        assert_eq!(mask.foreground_count(), 0);
        assert_eq!(stats.count_kind(DecisionKind::FlatBackground), 4);
        assert_eq!(stats.smooth_fits, 0, "flat blocks must not reach step 2");
        assert_eq!(stats.lad_fits, 0);
    }

    #[test]
    fn segment_image_flat_outlier_tile_is_all_foreground() {
        // uniform page with one flat tile of a very different color
        let luma = PixelPlane::from_fn(192, 128, |x, y| {
            if (64..128).contains(&x) && (64..128).contains(&y) {
                200
            } else {
                100
            }
        });
        let image = YCbCrImage::from_luma(luma);
        let mask = segment_image(&image, &SegConfig::default()).unwrap();
        for y in 0..128 {
            for x in 0..192 {
                let expected = (64..128).contains(&x) && (64..128).contains(&y);
                assert_eq!(mask.is_foreground(x, y), expected, "pixel ({x},{y})");
            }
        }
    }

    #[test]
    fn segment_image_representable_page_never_reaches_lad() {
        let dict = dict64();
        let mut alphas = Vec::new();
        for t in 0..6 {
            let mut alpha = vec![0.0; 10];
            alpha[0] = (90.0 + 15.0 * t as f64) * 64.0;
            alpha[1 + t % 9] = 40.0;
            alphas.push(alpha);
        }
        let luma = PixelPlane::from_fn(192, 128, |x, y| {
            let tile = (y / 64) * 3 + x / 64;
            let block = dict.synthesize(&alphas[tile]);
            block[(x % 64) * 64 + (y % 64)].round().clamp(0.0, 255.0) as u8
        });
        let image = YCbCrImage::from_luma(luma);
        let (mask, stats) = segment_image_with_stats(&image, &SegConfig::default()).unwrap();
        assert_eq!(mask.foreground_count(), 0);
        assert_eq!(stats.lad_fits, 0, "step 3 must never run on representable blocks");
        assert_eq!(stats.count_kind(DecisionKind::SmoothBackground), 6);
    }

    #[test]
    fn segment_image_handles_partial_edge_tiles() {
        let image = flat_image(100, 70, 77);
        let (mask, _) = segment_image_with_stats(&image, &SegConfig::default()).unwrap();
        assert_eq!(mask.width(), 100);
        assert_eq!(mask.height(), 70);
        assert_eq!(mask.foreground_count(), 0);
    }

    #[test]
    fn segment_image_is_schedule_independent() {
        // multi-tile page with partial right/bottom tiles and strokes
        let spec = crate::synth::SynthSpec {
            width: 230,
            height: 150,
            fg_coverage: 0.08,
            seed: 917,
            ..crate::synth::SynthSpec::default()
        };
        let (image, _) = crate::synth::generate(&spec).unwrap();
        let cfg = SegConfig::default();
        let sequential = segment_image(&image, &cfg).unwrap();
        for threads in [2usize, 4, 8] {
            let parallel = segment_image_threads(&image, &cfg, threads).unwrap();
            assert_eq!(parallel, sequential, "threads = {threads}");
        }
    }

    #[test]
    fn segment_image_handles_degenerate_dimensions() {
        for (w, h) in [(1usize, 1usize), (7, 5), (64, 8), (8, 64), (65, 65), (3, 200)] {
            let image = flat_image(w, h, 99);
            let mask = segment_image(&image, &SegConfig::default()).unwrap();
            assert_eq!((mask.width(), mask.height()), (w, h));
            assert_eq!(mask.foreground_count(), 0, "{w}x{h}");
        }
    }

    #[test]
    fn segment_image_detects_near_threshold_strokes() {
        // stroke offset at only twice eps1 still leaves residuals past the
        // threshold on both sides
        let spec = crate::synth::SynthSpec {
            width: 256,
            height: 192,
            fg_luma_offset: 20,
            fg_coverage: 0.1,
            seed: 402,
            ..crate::synth::SynthSpec::default()
        };
        let (image, gt) = crate::synth::generate(&spec).unwrap();
        let mask = segment_image(&image, &SegConfig::default()).unwrap();
        let report = crate::eval::evaluate(&mask, &gt).unwrap();
        assert!(report.precision.unwrap() >= 0.99);
        assert!(report.recall.unwrap() >= 0.99);
    }

    #[test]
    fn segment_image_on_flat_background_with_strokes() {
        let spec = crate::synth::SynthSpec {
            width: 256,
            height: 192,
            background: crate::synth::BackgroundKind::Flat,
            fg_coverage: 0.1,
            seed: 901,
            ..crate::synth::SynthSpec::default()
        };
        let (image, gt) = crate::synth::generate(&spec).unwrap();
        let mask = segment_image(&image, &SegConfig::default()).unwrap();
        let report = crate::eval::evaluate(&mask, &gt).unwrap();
        assert!(report.precision.unwrap() >= 0.99);
        assert!(report.recall.unwrap() >= 0.99);
    }

    #[test]
    fn segment_image_finds_strokes_on_partial_edge_pages() {
        let spec = crate::synth::SynthSpec {
            width: 100,
            height: 70,
            fg_coverage: 0.1,
            seed: 33,
            ..crate::synth::SynthSpec::default()
        };
        let (image, gt) = crate::synth::generate(&spec).unwrap();
        let mask = segment_image(&image, &SegConfig::default()).unwrap();
        let report = crate::eval::evaluate(&mask, &gt).unwrap();
        let precision = report.precision.unwrap();
        let recall = report.recall.unwrap();
        assert!(precision >= 0.85, "precision {precision:.4}");
        assert!(recall >= 0.85, "recall {recall:.4}");
    }

    #[test]
    fn segment_image_rejects_empty_and_bad_config() {
        let image = flat_image(64, 64, 0);
        let bad = SegConfig { eps4: 2.0, ..SegConfig::default() };
        assert!(segment_image(&image, &bad).is_err());
        assert!(segment_image_threads(&image, &SegConfig::default(), 0).is_err());
    }

    #[test]
    fn subdivision_respects_minimum_block_size() {
        let luma = PixelPlane::from_fn(64, 64, |x, y| if (x + y) % 2 == 0 { 0 } else { 255 });
        let image = YCbCrImage::from_luma(luma);
        let (_, stats) = segment_image_with_stats(&image, &SegConfig::default()).unwrap();
        let sizes = stats.block_sizes_decided();
        assert_eq!(sizes, vec![8, 16, 32, 64]);
        assert!(sizes.iter().all(|&s| s >= 8));
    }

    #[test]
    fn segment_image_works_across_block_ladders_and_basis_counts() {
        let spec = crate::synth::SynthSpec {
            width: 230,
            height: 140,
            fg_coverage: 0.1,
            seed: 5150,
            ..crate::synth::SynthSpec::default()
        };
        let (image, gt) = crate::synth::generate(&spec).unwrap();
        let configs = [
            SegConfig { block_size_max: 32, ..SegConfig::default() },
            SegConfig { block_size_min: 32, ..SegConfig::default() },
            SegConfig { block_size_max: 16, block_size_min: 16, ..SegConfig::default() },
            SegConfig { num_bases: 4, ..SegConfig::default() },
        ];
        for cfg in configs {
            let mask = segment_image(&image, &cfg).unwrap();
            assert_eq!((mask.width(), mask.height()), (230, 140));
            let report = crate::eval::evaluate(&mask, &gt).unwrap();
            assert!(
                report.precision.unwrap() >= 0.8 && report.recall.unwrap() >= 0.9,
                "cfg {cfg:?}: {report:?}"
            );
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(12))]

            /// Arbitrary content and dimensions: the mask always covers the
            /// image exactly and the parallel schedule reproduces the
            /// sequential result bit for bit.
            #[test]
            fn mask_total_and_schedule_independent(
                w in 1usize..90,
                h in 1usize..90,
                seed in any::<u64>(),
            ) {
                let mut s = seed;
                let luma = PixelPlane::from_fn(w, h, |_, _| {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    (s >> 56) as u8
                });
                let image = YCbCrImage::from_luma(luma);
                // smaller tiling keeps the solver work bounded
                let cfg = SegConfig {
                    block_size_max: 16,
                    admm_iterations: 40,
                    ..SegConfig::default()
                };
                let sequential = segment_image(&image, &cfg).unwrap();
                prop_assert_eq!((sequential.width(), sequential.height()), (w, h));
                let parallel = segment_image_threads(&image, &cfg, 4).unwrap();
                prop_assert_eq!(&parallel, &sequential);
            }
        }
    }
}
