//! Segmentation configuration and validation.

use crate::error::{Error, Result};

/// All thresholds, solver parameters, and block-size bounds for the
/// segmentation pipeline.
///
/// The defaults reproduce the reference parameterization: 64..8 block sizes,
/// 10 cosine bases, intensity thresholds eps1/eps2/eps3 of 10/10/3, a
/// background-fraction threshold eps4 of 0.5, and 200 ADMM iterations with
/// rho = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SegConfig {
    /// Top-level tiling block size in pixels (power of two).
    pub block_size_max: usize,
    /// Smallest block the quadtree recursion may reach (power of two).
    pub block_size_min: usize,
    /// Number of cosine basis functions K in the smooth model.
    pub num_bases: usize,
    /// Per-pixel residual threshold separating background from foreground
    /// after the robust fit (8-bit intensity units).
    pub eps1: f64,
    /// Maximum luma difference for a flat block to match a neighbor's
    /// background color.
    pub eps2: f64,
    /// Maximum absolute least-squares residual for a whole block to be
    /// declared smooth background.
    pub eps3: f64,
    /// Background fraction above which a robust-fit classification is
    /// accepted without subdividing.
    pub eps4: f64,
    /// ADMM augmented-Lagrangian parameter.
    pub rho: f64,
    /// Fixed ADMM iteration count.
    pub admm_iterations: usize,
    /// Whether to run the chroma refinement pass after luma segmentation.
    pub enable_chroma_refine: bool,
}

impl Default for SegConfig {
    fn default() -> Self {
        Self {
            block_size_max: 64,
            block_size_min: 8,
            num_bases: 10,
            eps1: 10.0,
            eps2: 10.0,
            eps3: 3.0,
            eps4: 0.5,
            rho: 1.0,
            admm_iterations: 200,
            enable_chroma_refine: true,
        }
    }
}

impl SegConfig {
    /// Checks all field invariants, returning the first violation.
    pub fn validate(&self) -> Result<()> {
        if !self.block_size_max.is_power_of_two() || !self.block_size_min.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "block sizes must be powers of two, got max {} min {}",
                self.block_size_max, self.block_size_min
            )));
        }
        if self.block_size_min > self.block_size_max {
            return Err(Error::InvalidArgument(format!(
                "block_size_min {} exceeds block_size_max {}",
                self.block_size_min, self.block_size_max
            )));
        }
        if self.num_bases == 0 || self.num_bases > self.block_size_min * self.block_size_min {
            return Err(Error::InvalidArgument(format!(
                "num_bases {} must be in 1..={} (block_size_min squared)",
                self.num_bases,
                self.block_size_min * self.block_size_min
            )));
        }
        for (name, eps) in [("eps1", self.eps1), ("eps2", self.eps2), ("eps3", self.eps3)] {
            if !eps.is_finite() || eps < 0.0 {
                return Err(Error::InvalidArgument(format!("{name} must be >= 0, got {eps}")));
            }
        }
        if !self.eps4.is_finite() || !(0.0..=1.0).contains(&self.eps4) {
            return Err(Error::InvalidArgument(format!(
                "eps4 must lie in [0, 1], got {}",
                self.eps4
            )));
        }
        if !self.rho.is_finite() || self.rho <= 0.0 {
            return Err(Error::InvalidArgument(format!("rho must be > 0, got {}", self.rho)));
        }
        if self.admm_iterations == 0 {
            return Err(Error::InvalidArgument("admm_iterations must be >= 1".into()));
        }
        Ok(())
    }

    /// Block sizes used by the quadtree, largest first.
    pub fn block_sizes(&self) -> Vec<usize> {
        let mut sizes = Vec::new();
        let mut s = self.block_size_max;
        while s >= self.block_size_min {
            sizes.push(s);
            if s == self.block_size_min {
                break;
            }
            s /= 2;
        }
        sizes
    }
}
