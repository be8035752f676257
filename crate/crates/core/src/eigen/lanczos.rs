//! Lanczos iteration with full reorthogonalization for the largest
//! eigenpairs of a symmetric operator given only through matrix–vector
//! products.

use nalgebra::{DMatrix, DMatrixView, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::tridiagonal::{tridiagonal_eigen, Rows};
use crate::error::{LabError, Result};
use crate::rng::rng_from_seed;

/// Result of [`largest_eigenpairs`], values in descending order.
#[derive(Debug, Clone)]
pub struct LanczosOutput {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
    /// Ritz residual estimates `|β_m s_{m,i}|`.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub matvecs: usize,
}

/// Computes the `nev` largest eigenpairs of the `n × n` operator `apply`.
///
/// A Ritz pair is accepted once its residual estimate is below `tol(θ)`.
/// All Lanczos vectors are kept and reorthogonalized twice (classical
/// Gram–Schmidt), so the basis stays orthonormal to machine precision.
pub fn largest_eigenpairs(
    n: usize,
    nev: usize,
    max_iter: usize,
    seed: u64,
    mut apply: impl FnMut(&DVector<f64>, &mut DVector<f64>),
    tol: impl Fn(f64) -> f64,
) -> Result<LanczosOutput> {
    if nev == 0 || nev > n {
        return Err(LabError::InvalidArgument(format!("cannot compute {nev} eigenpairs of a {n}×{n} operator")));
    }
    let max_iter = max_iter.clamp(nev, n);
    let mut rng = rng_from_seed(seed);
    let mut random_vector = |n: usize| DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));

    let mut basis: Vec<f64> = Vec::with_capacity(n * (max_iter + 1));
    let mut alphas: Vec<f64> = Vec::with_capacity(max_iter);
    let mut betas: Vec<f64> = Vec::with_capacity(max_iter);
    let mut w = DVector::zeros(n);
    let mut coeffs = DVector::zeros(max_iter + 1);
    let mut matvecs = 0;

    let mut q = random_vector(n);
    q /= q.norm();
    basis.extend_from_slice(q.as_slice());
    let mut scale: f64 = 0.0;

    let mut j = 0;
    loop {
        let m = j + 1;
        apply(&q, &mut w);
        matvecs += 1;
        let alpha = q.dot(&w);
        alphas.push(alpha);
        reorthogonalize(&basis, n, m, &mut w, &mut coeffs);
        let mut beta = w.norm();
        scale = scale.max(alpha.abs() + beta);

        let exhausted = m == max_iter;
        let breakdown = beta <= 1e-13 * scale.max(f64::MIN_POSITIVE);
        if m >= nev && (exhausted || breakdown || (m - nev).is_multiple_of(4)) {
            let (values, last) = tridiagonal_eigen(&alphas, &betas, Rows::Last);
            let residuals: Vec<f64> = (0..nev).map(|i| (beta * last[m - 1 - i]).abs()).collect();
            let converged = (0..nev).all(|i| residuals[i] <= tol(values[m - 1 - i]));
            if converged || (breakdown && m == n) {
                return Ok(finish(&basis, n, &alphas, &betas, nev, beta, j + 1, matvecs));
            }
            if exhausted {
                return Err(LabError::NotConverged { iterations: m, residuals });
            }
        }
        if breakdown {
            // Invariant subspace: continue with a fresh direction.
            let mut fresh = random_vector(n);
            reorthogonalize(&basis, n, m, &mut fresh, &mut coeffs);
            w = fresh.clone() / fresh.norm();
            beta = 0.0;
        } else {
            w /= beta;
        }
        betas.push(beta);
        q.copy_from(&w);
        basis.extend_from_slice(q.as_slice());
        j += 1;
    }
}

/// Removes from `w` its components along the first `m` basis vectors, twice.
fn reorthogonalize(basis: &[f64], n: usize, m: usize, w: &mut DVector<f64>, coeffs: &mut DVector<f64>) {
    let q = DMatrixView::from_slice(&basis[..n * m], n, m);
    let mut h = coeffs.rows_mut(0, m);
    for _ in 0..2 {
        h.gemv_tr(1.0, &q, w, 0.0);
        w.gemv(-1.0, &q, &h, 1.0);
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    basis: &[f64],
    n: usize,
    alphas: &[f64],
    betas: &[f64],
    nev: usize,
    beta: f64,
    iterations: usize,
    matvecs: usize,
) -> LanczosOutput {
    let m = alphas.len();
    let (values, z) = tridiagonal_eigen(alphas, &betas[..m - 1], Rows::All);
    let z = DMatrix::from_row_slice(m, m, &z);
    let q = DMatrixView::from_slice(&basis[..n * m], n, m);
    let cols: Vec<usize> = (0..nev).map(|i| m - 1 - i).collect();
    let s = z.select_columns(&cols);
    LanczosOutput {
        values: cols.iter().map(|&c| values[c]).collect(),
        vectors: q * s,
        residuals: cols.iter().map(|&c| (beta * z[(m - 1, c)]).abs()).collect(),
        iterations,
        matvecs,
    }
}
