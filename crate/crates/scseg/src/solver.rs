//! Least-squares and least-absolute-deviation model fitting.
//!
//! The robust fit solves `argmin_alpha ||f - P alpha||_1` with ADMM on the
//! splitting `z = P alpha - f`:
//!
//! ```text
//! alpha <- (P^T P)^{-1} P^T (f + z - u)
//! z     <- S_{1/rho}(P alpha - f + u)
//! u     <- u + P alpha - z - f
//! ```
//!
//! starting from z = 0, u = 0 and running a fixed iteration count. The
//! iteratively reweighted least-squares fit is kept as an independent
//! cross-check of the ADMM solution and is not used by the pipeline.

use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::linalg;

/// Coefficient vector of a fitted smooth model for one block and one plane.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothModel {
    pub coefficients: Vec<f64>,
    pub block_size: usize,
}

/// Outcome of one model fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: SmoothModel,
    /// Per-pixel residuals f - P alpha in vectorized block order.
    pub residuals: Vec<f64>,
    /// Sum of absolute residuals.
    pub objective_l1: f64,
}

impl FitResult {
    fn from_coefficients(dict: &Dictionary, coefficients: Vec<f64>, signal: &[f64]) -> Self {
        let approx = dict.synthesize(&coefficients);
        let residuals: Vec<f64> = signal.iter().zip(&approx).map(|(f, p)| f - p).collect();
        let objective_l1 = residuals.iter().map(|r| r.abs()).sum();
        FitResult {
            model: SmoothModel { coefficients, block_size: dict.block_size() },
            residuals,
            objective_l1,
        }
    }
}

/// ADMM iteration state: the auxiliary variable z = P alpha - f, the scaled
/// dual u, and the augmented-Lagrangian parameter rho.
#[derive(Debug, Clone)]
pub struct AdmmState {
    pub z: Vec<f64>,
    pub u: Vec<f64>,
    pub rho: f64,
}

impl AdmmState {
    fn zeros(len: usize, rho: f64) -> Self {
        Self { z: vec![0.0; len], u: vec![0.0; len], rho }
    }
}

/// How the alpha update applies the normal-equation solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AlphaUpdate {
    /// Use the precomputed (P^T P)^{-1} P^T from the dictionary.
    #[default]
    PseudoInverse,
    /// Use P^T directly, valid because the basis columns are orthonormal.
    TransposeShortcut,
}

/// Knobs for [`lad_fit_admm_with`]. `early_stop_tol` is off by default so
/// the solver runs the exact configured iteration count.
#[derive(Debug, Clone)]
pub struct AdmmOptions {
    pub rho: f64,
    pub iterations: usize,
    /// When set, stop once both the primal residual ||P alpha - z - f|| and
    /// the dual residual rho ||P^T (z - z_prev)|| drop below `tol * N`.
    pub early_stop_tol: Option<f64>,
    pub alpha_update: AlphaUpdate,
}

impl AdmmOptions {
    pub fn new(rho: f64, iterations: usize) -> Self {
        Self { rho, iterations, early_stop_tol: None, alpha_update: AlphaUpdate::default() }
    }
}

/// The proximal operator of the L1 norm: sign(x) * max(|x| - kappa, 0).
#[inline]
pub fn soft_threshold(x: f64, kappa: f64) -> f64 {
    debug_assert!(kappa >= 0.0);
    if x > kappa {
        x - kappa
    } else if x < -kappa {
        x + kappa
    } else {
        0.0
    }
}

fn check_signal(dict: &Dictionary, signal: &[f64]) -> Result<()> {
    if signal.len() != dict.signal_len() {
        return Err(Error::dims("solver signal", dict.signal_len(), signal.len()));
    }
    if signal.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("solver signal contains non-finite values".into()));
    }
    Ok(())
}

/// L2-optimal fit: alpha = (P^T P)^{-1} P^T f, which reduces to P^T f for
/// the orthonormal dictionary.
pub fn least_squares_fit(dict: &Dictionary, signal: &[f64]) -> Result<FitResult> {
    check_signal(dict, signal)?;
    let coefficients = dict.pinv_apply(signal);
    Ok(FitResult::from_coefficients(dict, coefficients, signal))
}

/// L1-optimal fit by ADMM with the reference defaults: fixed iteration
/// count, zero-initialized state, no early stopping.
pub fn lad_fit_admm(
    dict: &Dictionary,
    signal: &[f64],
    rho: f64,
    iterations: usize,
) -> Result<FitResult> {
    lad_fit_admm_with(dict, signal, &AdmmOptions::new(rho, iterations))
}

/// L1-optimal fit by ADMM with explicit options.
pub fn lad_fit_admm_with(
    dict: &Dictionary,
    signal: &[f64],
    opts: &AdmmOptions,
) -> Result<FitResult> {
    check_signal(dict, signal)?;
    if !opts.rho.is_finite() || opts.rho <= 0.0 {
        return Err(Error::InvalidArgument(format!("rho must be > 0, got {}", opts.rho)));
    }
    if opts.iterations == 0 {
        return Err(Error::InvalidArgument("iterations must be >= 1".into()));
    }

    let len = dict.signal_len();
    let kappa = 1.0 / opts.rho;
    let mut state = AdmmState::zeros(len, opts.rho);
    let mut rhs = vec![0.0; len];
    let mut approx = vec![0.0; len];
    let mut alpha = vec![0.0; dict.num_bases()];
    let mut z_prev = vec![0.0; len];
    let stop_threshold = opts.early_stop_tol.map(|tol| tol * (len as f64).sqrt());

    for _ in 0..opts.iterations {
        for i in 0..len {
            rhs[i] = signal[i] + state.z[i] - state.u[i];
        }
        alpha = match opts.alpha_update {
            AlphaUpdate::PseudoInverse => dict.pinv_apply(&rhs),
            AlphaUpdate::TransposeShortcut => dict.transpose_apply(&rhs),
        };
        dict.synthesize_into(&alpha, &mut approx);

        if stop_threshold.is_some() {
            z_prev.copy_from_slice(&state.z);
        }
        for i in 0..len {
            let w = approx[i] - signal[i] + state.u[i];
            let zi = soft_threshold(w, kappa);
            state.u[i] += approx[i] - zi - signal[i];
            state.z[i] = zi;
        }

        if let Some(threshold) = stop_threshold {
            let primal: f64 = (0..len)
                .map(|i| {
                    let r = approx[i] - state.z[i] - signal[i];
                    r * r
                })
                .sum::<f64>()
                .sqrt();
            let dz: Vec<f64> = (0..len).map(|i| state.z[i] - z_prev[i]).collect();
            let dual =
                state.rho * dict.transpose_apply(&dz).iter().map(|v| v * v).sum::<f64>().sqrt();
            if primal < threshold && dual < threshold {
                break;
            }
        }
    }

    Ok(FitResult::from_coefficients(dict, alpha, signal))
}

/// Iteratively reweighted least-squares approximation of the L1 fit.
///
/// Weights are w_i = 1 / max(|r_i|, epsilon); each round solves the weighted
/// normal equations and the best-objective iterate is returned. This exists
/// as an independent route to the LAD optimum for cross-checking the ADMM
/// solver; production code paths use [`lad_fit_admm`].
pub fn lad_fit_irls(
    dict: &Dictionary,
    signal: &[f64],
    iterations: usize,
    epsilon: f64,
) -> Result<FitResult> {
    check_signal(dict, signal)?;
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::InvalidArgument(format!("epsilon must be > 0, got {epsilon}")));
    }
    if iterations == 0 {
        return Err(Error::InvalidArgument("iterations must be >= 1".into()));
    }

    let len = dict.signal_len();
    let k = dict.num_bases();
    let mut weights = vec![1.0; len];
    let mut best: Option<FitResult> = None;

    for _ in 0..iterations {
        // weighted normal equations: (P^T W P) alpha = P^T W f
        let mut a = vec![0.0; k * k];
        let mut b = vec![0.0; k];
        for i in 0..len {
            let row = dict.row(i);
            let w = weights[i];
            for p in 0..k {
                let wp = w * row[p];
                b[p] += wp * signal[i];
                for q in 0..k {
                    a[p * k + q] += wp * row[q];
                }
            }
        }
        if !linalg::cholesky_decompose(&mut a, k) {
            break;
        }
        let mut alpha = b;
        linalg::cholesky_solve(&a, k, &mut alpha);

        let fit = FitResult::from_coefficients(dict, alpha, signal);
        for (w, r) in weights.iter_mut().zip(&fit.residuals) {
            *w = 1.0 / r.abs().max(epsilon);
        }
        match &best {
            Some(b) if b.objective_l1 <= fit.objective_l1 => {}
            _ => best = Some(fit),
        }
    }

    best.ok_or_else(|| Error::InvalidArgument("IRLS produced no iterate".into()))
}
