//! Low-frequency 2-D cosine basis dictionaries.
//!
//! A dictionary for block size N and basis count K is the N^2 x K matrix
//! whose k-th column is the vectorized 2-D DCT-II basis function for the
//! k-th frequency pair in zig-zag scan order. With the orthonormal scaling
//! used here the columns satisfy P^T P = I, so least-squares coefficients
//! are plain inner products with the columns.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, LazyLock, Mutex};

use crate::error::{Error, Result};
use crate::linalg;

/// The first `count` frequency pairs (u, v) of the JPEG-style zig-zag scan:
/// anti-diagonals u + v = 0, 1, 2, ... with ascending u on odd diagonals and
/// descending u on even ones, starting at the DC pair (0, 0).
pub fn zigzag_frequencies(count: usize) -> Vec<(u32, u32)> {
    // A count x count grid always contains the first `count` entries of the
    // unbounded scan.
    zigzag_scan(count.max(1), count)
}

/// Zig-zag scan of an n x n frequency grid, truncated to `count` pairs.
fn zigzag_scan(n: usize, count: usize) -> Vec<(u32, u32)> {
    let mut pairs = Vec::with_capacity(count);
    if n == 0 || count == 0 {
        return pairs;
    }
    'diag: for d in 0..=(2 * (n - 1)) {
        let lo = d.saturating_sub(n - 1);
        let hi = d.min(n - 1);
        let range = lo..=hi;
        let push = |pairs: &mut Vec<(u32, u32)>, u: usize| {
            pairs.push((u as u32, (d - u) as u32));
        };
        if d % 2 == 1 {
            for u in range {
                push(&mut pairs, u);
                if pairs.len() == count {
                    break 'diag;
                }
            }
        } else {
            for u in range.rev() {
                push(&mut pairs, u);
                if pairs.len() == count {
                    break 'diag;
                }
            }
        }
    }
    pairs
}

/// Value of the orthonormal 2-D DCT-II basis with frequency pair (u, v) at
/// pixel (x, y) of an N x N block:
/// beta_u * beta_v * cos((2x+1) pi u / 2N) * cos((2y+1) pi v / 2N)
/// with beta_0 = sqrt(1/N) and beta_w = sqrt(2/N) for w > 0.
pub fn basis_value(u: u32, v: u32, x: u32, y: u32, n: u32) -> f64 {
    debug_assert!(u < n && v < n && x < n && y < n);
    let nf = f64::from(n);
    let beta = |w: u32| {
        if w == 0 {
            (1.0 / nf).sqrt()
        } else {
            (2.0 / nf).sqrt()
        }
    };
    let cx = (f64::from(2 * x + 1) * PI * f64::from(u) / (2.0 * nf)).cos();
    let cy = (f64::from(2 * y + 1) * PI * f64::from(v) / (2.0 * nf)).cos();
    beta(u) * beta(v) * cx * cy
}

/// The N^2 x K matrix of vectorized cosine bases plus its precomputed
/// pseudo-inverse (P^T P)^{-1} P^T.
#[derive(Debug, Clone)]
pub struct Dictionary {
    block_size: usize,
    num_bases: usize,
    /// Row-major N^2 x K: `matrix[i * K + k]` is basis k at vector index i.
    matrix: Vec<f64>,
    /// Row-major K x N^2: `pinv[k * N^2 + i]`.
    pinv: Vec<f64>,
    freq_pairs: Vec<(u32, u32)>,
}

impl Dictionary {
    /// Builds the dictionary for `block_size` x `block_size` blocks with
    /// `num_bases` basis functions. Fails when `num_bases` exceeds the
    /// number of available bases (block_size squared) or is zero.
    pub fn build(block_size: usize, num_bases: usize) -> Result<Self> {
        let len = block_size * block_size;
        if block_size == 0 || num_bases == 0 || num_bases > len {
            return Err(Error::InvalidArgument(format!(
                "dictionary needs 1 <= K <= N^2, got N {block_size}, K {num_bases}"
            )));
        }
        let freq_pairs = zigzag_scan(block_size, num_bases);
        let n = block_size as u32;
        let mut matrix = vec![0.0; len * num_bases];
        for (k, &(u, v)) in freq_pairs.iter().enumerate() {
            for x in 0..block_size {
                for y in 0..block_size {
                    // column-major vectorization, matching vectorize_block
                    let i = x * block_size + y;
                    matrix[i * num_bases + k] = basis_value(u, v, x as u32, y as u32, n);
                }
            }
        }

        // Precompute (P^T P)^{-1} P^T once; for this orthonormal basis the
        // Gram matrix is the identity and the result coincides with P^T.
        let k = num_bases;
        let mut gram = vec![0.0; k * k];
        for i in 0..len {
            let row = &matrix[i * k..(i + 1) * k];
            for a in 0..k {
                for b in 0..k {
                    gram[a * k + b] += row[a] * row[b];
                }
            }
        }
        let gram_inv = linalg::spd_inverse(&gram, k).ok_or_else(|| {
            Error::InvalidArgument("dictionary basis matrix is rank deficient".into())
        })?;
        let mut pinv = vec![0.0; k * len];
        for a in 0..k {
            for i in 0..len {
                let mut acc = 0.0;
                for b in 0..k {
                    acc += gram_inv[a * k + b] * matrix[i * k + b];
                }
                pinv[a * len + i] = acc;
            }
        }

        Ok(Self { block_size, num_bases, matrix, pinv, freq_pairs })
    }

    /// Shared dictionary from the process-wide cache, built on first use.
    pub fn cached(block_size: usize, num_bases: usize) -> Result<Arc<Self>> {
        type Cache = Mutex<HashMap<(usize, usize), Arc<Dictionary>>>;
        static CACHE: LazyLock<Cache> = LazyLock::new(|| Mutex::new(HashMap::new()));
        let mut cache = CACHE.lock().expect("dictionary cache poisoned");
        if let Some(dict) = cache.get(&(block_size, num_bases)) {
            return Ok(Arc::clone(dict));
        }
        let dict = Arc::new(Self::build(block_size, num_bases)?);
        cache.insert((block_size, num_bases), Arc::clone(&dict));
        Ok(dict)
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn num_bases(&self) -> usize {
        self.num_bases
    }

    /// Signal length N^2 the dictionary operates on.
    pub fn signal_len(&self) -> usize {
        self.block_size * self.block_size
    }

    pub fn freq_pairs(&self) -> &[(u32, u32)] {
        &self.freq_pairs
    }

    /// Entry of column k at vector index i.
    #[inline]
    pub fn entry(&self, i: usize, k: usize) -> f64 {
        self.matrix[i * self.num_bases + k]
    }

    /// Row i of the basis matrix (all K basis values at one pixel).
    #[inline]
    pub(crate) fn row(&self, i: usize) -> &[f64] {
        &self.matrix[i * self.num_bases..(i + 1) * self.num_bases]
    }

    /// P * alpha.
    pub fn synthesize(&self, coefficients: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.signal_len()];
        self.synthesize_into(coefficients, &mut out);
        out
    }

    pub(crate) fn synthesize_into(&self, coefficients: &[f64], out: &mut [f64]) {
        debug_assert_eq!(coefficients.len(), self.num_bases);
        debug_assert_eq!(out.len(), self.signal_len());
        let k = self.num_bases;
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.matrix[i * k..(i + 1) * k];
            let mut acc = 0.0;
            for (c, p) in coefficients.iter().zip(row) {
                acc += c * p;
            }
            *o = acc;
        }
    }

    /// P^T * signal.
    pub fn transpose_apply(&self, signal: &[f64]) -> Vec<f64> {
        debug_assert_eq!(signal.len(), self.signal_len());
        let k = self.num_bases;
        let mut out = vec![0.0; k];
        for (i, &s) in signal.iter().enumerate() {
            let row = &self.matrix[i * k..(i + 1) * k];
            for (o, p) in out.iter_mut().zip(row) {
                *o += s * p;
            }
        }
        out
    }

    /// (P^T P)^{-1} P^T * signal using the precomputed pseudo-inverse.
    pub fn pinv_apply(&self, signal: &[f64]) -> Vec<f64> {
        debug_assert_eq!(signal.len(), self.signal_len());
        let len = self.signal_len();
        let mut out = vec![0.0; self.num_bases];
        for (a, o) in out.iter_mut().enumerate() {
            let row = &self.pinv[a * len..(a + 1) * len];
            let mut acc = 0.0;
            for (p, s) in row.iter().zip(signal) {
                acc += p * s;
            }
            *o = acc;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zigzag_starts_at_dc() {
        assert_eq!(zigzag_frequencies(1), vec![(0, 0)]);
    }

    #[test]
    fn zigzag_first_three() {
        assert_eq!(zigzag_frequencies(3), vec![(0, 0), (0, 1), (1, 0)]);
    }

    #[test]
    fn zigzag_first_ten_matches_jpeg_table() {
        // cross-checked by hand against the standard JPEG zig-zag scan
        assert_eq!(
            zigzag_frequencies(10),
            vec![(0, 0), (0, 1), (1, 0), (2, 0), (1, 1), (0, 2), (0, 3), (1, 2), (2, 1), (3, 0)]
        );
    }

    #[test]
    fn bounded_scan_covers_full_grid() {
        let pairs = zigzag_scan(2, 4);
        assert_eq!(pairs, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
        let pairs = zigzag_scan(8, 64);
        assert_eq!(pairs.len(), 64);
        assert_eq!(pairs[63], (7, 7));
    }

    proptest! {
        #[test]
        fn zigzag_is_prefix_closed(k in 1usize..64) {
            let shorter = zigzag_frequencies(k);
            let longer = zigzag_frequencies(k + 1);
            prop_assert_eq!(&longer[..k], &shorter[..]);
        }
    }

    #[test]
    fn dc_basis_value_is_one_over_n() {
        for (x, y) in [(0, 0), (3, 5), (7, 7)] {
            let v = basis_value(0, 0, x, y, 8);
            assert!((v - 0.125).abs() < 1e-15);
        }
    }

    #[test]
    fn first_ac_basis_value_matches_closed_form() {
        // sqrt(2/8) * sqrt(1/8) * cos(pi/16)
        let v = basis_value(1, 0, 0, 0, 8);
        assert!((v - 0.17337998066526844).abs() < 1e-12);
    }

    #[test]
    fn dc_column_has_unit_norm() {
        let dict = Dictionary::build(8, 1).unwrap();
        let dot: f64 = (0..64).map(|i| dict.entry(i, 0) * dict.entry(i, 0)).sum();
        assert!((dot - 1.0).abs() < 1e-12);
        assert!((0..64).all(|i| (dict.entry(i, 0) - 0.125).abs() < 1e-15));
    }

    fn max_gram_deviation(dict: &Dictionary) -> f64 {
        let k = dict.num_bases();
        let mut worst: f64 = 0.0;
        for a in 0..k {
            for b in 0..k {
                let mut acc = 0.0;
                for i in 0..dict.signal_len() {
                    acc += dict.entry(i, a) * dict.entry(i, b);
                }
                let expect = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((acc - expect).abs());
            }
        }
        worst
    }

    #[test]
    fn columns_are_orthonormal_for_all_pipeline_sizes() {
        for n in [8usize, 16, 32, 64] {
            let dict = Dictionary::build(n, 10).unwrap();
            assert!(max_gram_deviation(&dict) <= 1e-10, "orthonormality violated for N = {n}");
            for k in 0..10 {
                let norm: f64 =
                    (0..dict.signal_len()).map(|i| dict.entry(i, k).powi(2)).sum::<f64>().sqrt();
                assert!((norm - 1.0).abs() <= 1e-12, "column {k} norm off for N = {n}");
            }
        }
    }

    #[test]
    fn complete_two_by_two_basis_is_orthogonal_both_ways() {
        let dict = Dictionary::build(2, 4).unwrap();
        assert!(max_gram_deviation(&dict) <= 1e-12);
        // P P^T = I as well for a complete square basis
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = 0.0;
                for k in 0..4 {
                    acc += dict.entry(i, k) * dict.entry(j, k);
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((acc - expect).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn rejects_too_many_bases() {
        assert!(Dictionary::build(8, 65).is_err());
        assert!(Dictionary::build(8, 0).is_err());
    }

    #[test]
    fn dc_pair_comes_first() {
        let dict = Dictionary::build(16, 10).unwrap();
        assert_eq!(dict.freq_pairs()[0], (0, 0));
    }

    #[test]
    fn synthesized_signal_is_recovered_by_projection() {
        let dict = Dictionary::build(8, 10).unwrap();
        let alpha: Vec<f64> = (0..10).map(|k| 640.0 / (k + 1) as f64 - 30.0).collect();
        let f = dict.synthesize(&alpha);
        let recovered = dict.transpose_apply(&f);
        for (a, r) in alpha.iter().zip(&recovered) {
            assert!((a - r).abs() <= 1e-8);
        }
    }

    #[test]
    fn pseudo_inverse_equals_transpose_for_orthonormal_basis() {
        let dict = Dictionary::build(8, 10).unwrap();
        let signal: Vec<f64> = (0..64).map(|i| (i as f64 * 0.7).sin() * 100.0).collect();
        let a = dict.pinv_apply(&signal);
        let b = dict.transpose_apply(&signal);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-10);
        }
    }

    #[test]
    fn cache_returns_shared_instance_under_concurrency() {
        let handles: Vec<_> =
            (0..8).map(|_| std::thread::spawn(|| Dictionary::cached(16, 10).unwrap())).collect();
        let dicts: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        for d in &dicts[1..] {
            assert!(Arc::ptr_eq(&dicts[0], d));
        }
    }
}
