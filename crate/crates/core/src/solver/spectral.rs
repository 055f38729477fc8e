//! Spectral radius of a nonnegative matrix by power iteration.
//!
//! The iteration runs on `A + I`, which has the same Perron vector as `A` and
//! spectral radius `rho(A) + 1`, but no other eigenvalue of the same modulus.
//! This keeps periodic matrices (a mutual pair of users gives eigenvalues
//! `±rho`) from oscillating. Every iterate is strictly positive, so the
//! Collatz–Wielandt ratios `min_j (Bx)_j / x_j <= rho(B) <= max_j (Bx)_j / x_j`
//! bracket the answer and their gap is the stopping rule.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::matrix::CsrMatrix;

pub const DEFAULT_RHO_TOL: f64 = 1e-10;
pub const DEFAULT_RHO_MAX_ITER: usize = 100_000;

const START_SEED: u64 = 0x5eed_0f_a11;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralEstimate {
    /// Point estimate of `rho(A)`, always inside `[min row sum, max row sum]`.
    pub rho: f64,
    /// `false` when the bracket did not close to `tol` within the budget; `rho`
    /// is then the conservative upper bracket.
    pub converged: bool,
    pub iterations: usize,
    pub lower: f64,
    pub upper: f64,
}

/// Estimates `rho(a)` for a nonnegative square matrix (entries are taken in
/// absolute value).
pub fn spectral_radius_estimate(a: &CsrMatrix, tol: f64, max_iter: usize) -> SpectralEstimate {
    let n = a.dim();
    let row_sums: Vec<f64> = (0..n).map(|r| a.row(r).1.iter().map(|v| v.abs()).sum()).collect();
    let min_rs = row_sums.iter().copied().fold(f64::INFINITY, f64::min);
    let max_rs = row_sums.iter().copied().fold(0.0, f64::max);
    if n == 0 || max_rs == 0.0 {
        return SpectralEstimate {
            rho: 0.0,
            converged: true,
            iterations: 0,
            lower: 0.0,
            upper: 0.0,
        };
    }
    let clamp = |v: f64| v.clamp(min_rs, max_rs);

    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
    let mut y = vec![0.0; n];
    let (mut lower, mut upper) = (min_rs, max_rs);

    for it in 1..=max_iter {
        for r in 0..n {
            let (cols, vals) = a.row(r);
            let ax: f64 = cols.iter().zip(vals).map(|(&c, &v)| v.abs() * x[c]).sum();
            y[r] = ax + x[r];
        }
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for (yr, xr) in y.iter().zip(&x) {
            let ratio = yr / xr;
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        lower = lower.max(lo - 1.0);
        upper = upper.min(hi - 1.0);
        if upper - lower < tol {
            return SpectralEstimate {
                rho: clamp(0.5 * (lower + upper)),
                converged: true,
                iterations: it,
                lower,
                upper,
            };
        }
        let norm = y.iter().copied().fold(0.0, f64::max);
        for (xr, yr) in x.iter_mut().zip(&y) {
            *xr = yr / norm;
        }
    }
    SpectralEstimate {
        rho: clamp(upper),
        converged: false,
        iterations: max_iter,
        lower,
        upper,
    }
}
