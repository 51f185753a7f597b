//! Minimal dense linear algebra for the K x K systems the solvers need.
//!
//! Everything here runs in fixed iteration order so results are bit-stable
//! across runs and thread counts.

/// In-place Cholesky factorization of a symmetric positive-definite matrix
/// stored row-major; on success the lower triangle holds L with A = L L^T.
/// Returns `false` when the matrix is not (numerically) positive definite.
pub(crate) fn cholesky_decompose(a: &mut [f64], n: usize) -> bool {
    debug_assert_eq!(a.len(), n * n);
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        // rejects non-positive pivots and NaN alike
        if d.is_nan() || d <= 1e-12 {
            return false;
        }
        let ljj = d.sqrt();
        a[j * n + j] = ljj;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / ljj;
        }
    }
    true
}

/// Solves L L^T x = b in place given the factor from [`cholesky_decompose`].
pub(crate) fn cholesky_solve(l: &[f64], n: usize, b: &mut [f64]) {
    // forward substitution: L y = b
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
    // back substitution: L^T x = y
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Inverse of a symmetric positive-definite matrix, or `None` when the
/// factorization fails.
pub(crate) fn spd_inverse(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = a.to_vec();
    if !cholesky_decompose(&mut l, n) {
        return None;
    }
    let mut inv = vec![0.0; n * n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        col.fill(0.0);
        col[j] = 1.0;
        cholesky_solve(&l, n, &mut col);
        for i in 0..n {
            inv[i * n + j] = col[i];
        }
    }
    Some(inv)
}
