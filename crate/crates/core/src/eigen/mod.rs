//! Lowest eigenpairs of the graph Laplacians.
//!
//! Each variant is similar to a symmetric matrix
//! `S = (diag(a) − diag(s) W diag(s)) / c`, whose eigenvectors map back to
//! those of `L` by a diagonal scaling `b`:
//!
//! | variant | `a` | `s` | `c` | `b` |
//! |---|---|---|---|---|
//! | `un` | `D` | `1` | `(m₂/2) p ε N` | `1` |
//! | `rw` | `1` | `D^{-1/2}` | `m̃ ε` | `D^{-1/2}` |
//! | `dc` | `1` | `D^{-1} D̃^{-1/2}` | `m̃ ε` | `D̃^{-1/2}` |
//!
//! Neither `L_rw`, `L̃_rw` nor `W̃` is ever formed explicitly.

mod lanczos;
mod tridiagonal;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::graph::{FormVariant, GraphOperators, LaplacianKind};

pub use lanczos::{largest_eigenpairs, LanczosOutput};
pub use tridiagonal::{tridiagonal_eigen, Rows};

/// Eigensolver backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Full symmetric eigendecomposition of the `N × N` similar matrix.
    Dense,
    /// Lanczos with full reorthogonalization on `σI − S`.
    #[default]
    Iterative,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Dense => "dense",
            Backend::Iterative => "iterative",
        }
    }
}

impl std::str::FromStr for Backend {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(Backend::Dense),
            "iterative" => Ok(Backend::Iterative),
            other => Err(LabError::InvalidArgument(format!("unknown backend `{other}`"))),
        }
    }
}

/// Scaling convention of the returned eigenvectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    /// `‖v‖₂ = 1` (unnormalized Laplacian).
    Unit2Norm,
    /// `vᵀ D v = N p` (random-walk Laplacian; `p` the mean density).
    DNormNp,
    /// `vᵀ D̃ v = 1/N` (density-corrected Laplacian).
    TildeDNormRecipN,
}

/// Solver bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverMeta {
    pub backend: Backend,
    pub iterations: usize,
    pub matvecs: usize,
    /// `‖L v_k − λ_k v_k‖₂ / ‖v_k‖₂` for every returned pair.
    pub residuals: Vec<f64>,
}

impl SolverMeta {
    /// Largest residual relative to `|λ_k| + 1`.
    pub fn max_relative_residual(&self, eigenvalues: &[f64]) -> f64 {
        self.residuals.iter().zip(eigenvalues).map(|(r, l)| r / (l.abs() + 1.0)).fold(0.0, f64::max)
    }
}

/// Lowest eigenpairs of a graph Laplacian, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SpectralResult {
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors as columns, in the scaling given by `normalization`,
    /// with the largest-magnitude entry of every column positive.
    pub eigenvectors: DMatrix<f64>,
    pub normalization: Normalization,
    pub meta: SolverMeta,
}

impl SpectralResult {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

/// Tuning knobs of the iterative backend.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOptions {
    /// Residual tolerance relative to the shift `σ`.
    pub tolerance: f64,
    /// Residual tolerance relative to `|λ| + 1`.
    pub eigen_tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions { tolerance: 1e-10, eigen_tolerance: 1e-9, max_iterations: 1500, seed: 0x1A2C_0515 }
    }
}

/// The symmetric matrix similar to `L`, kept in factored form.
struct Similar<'a> {
    w: &'a DMatrix<f64>,
    a: DVector<f64>,
    s: DVector<f64>,
    c: f64,
    back: DVector<f64>,
    normalization: Normalization,
}

impl<'a> Similar<'a> {
    fn new(ops: &'a GraphOperators) -> Result<Self> {
        let n = ops.len();
        let d = ops.degrees();
        let spec = ops.spec();
        let ones = DVector::from_element(n, 1.0);
        Ok(match ops.kind() {
            LaplacianKind::Unnormalized => Similar {
                w: ops.affinity(),
                a: d.clone(),
                s: ones.clone(),
                c: ops.unnormalized_scale()?,
                back: ones,
                normalization: Normalization::Unit2Norm,
            },
            LaplacianKind::RandomWalk => {
                let inv_sqrt = d.map(|x| 1.0 / x.sqrt());
                Similar {
                    w: ops.affinity(),
                    a: ones,
                    s: inv_sqrt.clone(),
                    c: spec.m_tilde() * spec.epsilon,
                    back: inv_sqrt,
                    normalization: Normalization::DNormNp,
                }
            }
            LaplacianKind::DensityCorrected => {
                let td = ops.tilde_degrees().expect("density-corrected build");
                let back = td.map(|x| 1.0 / x.sqrt());
                Similar {
                    w: ops.affinity(),
                    a: ones,
                    s: back.component_div(d),
                    c: spec.m_tilde() * spec.epsilon,
                    back,
                    normalization: Normalization::TildeDNormRecipN,
                }
            }
        })
    }

    fn apply(&self, x: &DVector<f64>, tmp: &mut DVector<f64>, out: &mut DVector<f64>) {
        tmp.copy_from(x);
        tmp.component_mul_assign(&self.s);
        out.gemv(1.0, self.w, tmp, 0.0);
        let inv_c = 1.0 / self.c;
        for i in 0..x.len() {
            out[i] = (self.a[i] * x[i] - self.s[i] * out[i]) * inv_c;
        }
    }

    fn dense(&self) -> DMatrix<f64> {
        let n = self.a.len();
        DMatrix::from_fn(n, n, |i, j| {
            let diag = if i == j { self.a[i] } else { 0.0 };
            (diag - self.s[i] * self.w[(i, j)] * self.s[j]) / self.c
        })
    }

    /// Gershgorin upper bound on the spectrum of `S`.
    fn gershgorin(&self) -> f64 {
        let n = self.a.len();
        let mut row = DVector::zeros(n);
        row.gemv(1.0, self.w, &self.s, 0.0);
        (0..n)
            .map(|i| {
                let wii = self.w[(i, i)] * self.s[i] * self.s[i];
                let off = self.s[i] * row[i] - wii;
                (self.a[i] - wii + off) / self.c
            })
            .fold(0.0, f64::max)
    }
}

/// Computes the `k_max + 1` smallest eigenpairs of the Laplacian of `ops`
/// with default solver options.
pub fn solve_lowest(ops: &GraphOperators, k_max: usize, backend: Backend) -> Result<SpectralResult> {
    solve_lowest_with(ops, k_max, backend, &LanczosOptions::default())
}

/// As [`solve_lowest`], with explicit Lanczos options.
pub fn solve_lowest_with(
    ops: &GraphOperators,
    k_max: usize,
    backend: Backend,
    options: &LanczosOptions,
) -> Result<SpectralResult> {
    let n = ops.len();
    let nev = k_max + 1;
    if nev > n {
        return Err(LabError::InvalidArgument(format!("k_max = {k_max} needs at least {nev} samples, got {n}")));
    }
    let sim = Similar::new(ops)?;
    let (values, vectors, iterations, matvecs) = match backend {
        Backend::Dense => {
            let eig = SymmetricEigen::new(sim.dense());
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
            order.truncate(nev);
            let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
            (values, eig.eigenvectors.select_columns(&order), 0, 0)
        }
        Backend::Iterative => {
            let sigma = sim.gershgorin();
            let mut tmp = DVector::zeros(n);
            let out = largest_eigenpairs(
                n,
                nev,
                options.max_iterations,
                options.seed ^ n as u64,
                |x, y| {
                    sim.apply(x, &mut tmp, y);
                    for i in 0..n {
                        y[i] = sigma * x[i] - y[i];
                    }
                },
                |theta| {
                    let lambda = sigma - theta;
                    (options.tolerance * sigma).min(options.eigen_tolerance * (lambda.abs() + 1.0))
                },
            )?;
            let values = out.values.iter().map(|t| sigma - t).collect();
            (values, out.vectors, out.iterations, out.matvecs + 1)
        }
    };
    finalize(ops, &sim, values, vectors, backend, iterations, matvecs)
}

fn finalize(
    ops: &GraphOperators,
    sim: &Similar,
    eigenvalues: Vec<f64>,
    mut vectors: DMatrix<f64>,
    backend: Backend,
    iterations: usize,
    matvecs: usize,
) -> Result<SpectralResult> {
    let n = ops.len();
    let nf = n as f64;
    for mut col in vectors.column_iter_mut() {
        col.component_mul_assign(&sim.back);
        let target = match sim.normalization {
            Normalization::Unit2Norm => col.norm(),
            Normalization::DNormNp => {
                let d_norm: f64 = col.iter().zip(ops.degrees().iter()).map(|(v, d)| v * v * d).sum();
                (d_norm / (nf * ops.mean_density())).sqrt()
            }
            Normalization::TildeDNormRecipN => {
                let td = ops.tilde_degrees().expect("density-corrected build");
                let norm: f64 = col.iter().zip(td.iter()).map(|(v, d)| v * v * d).sum();
                (norm * nf).sqrt()
            }
        };
        col /= target;
        let pivot = col.iter().cloned().fold(0.0, |m: f64, v| if v.abs() > m.abs() { v } else { m });
        if pivot < 0.0 {
            col.neg_mut();
        }
    }
    let mut residuals = Vec::with_capacity(eigenvalues.len());
    for (k, lambda) in eigenvalues.iter().enumerate() {
        let v = vectors.column(k);
        let lv = ops.apply(v.as_slice())?;
        let r: f64 = lv.iter().zip(v.iter()).map(|(a, b)| (a - lambda * b).powi(2)).sum();
        residuals.push(r.sqrt() / v.norm());
    }
    Ok(SpectralResult {
        eigenvalues,
        eigenvectors: vectors,
        normalization: sim.normalization,
        meta: SolverMeta { backend, iterations, matvecs: matvecs + residuals.len(), residuals },
    })
}

/// Rayleigh quotient of `u` matching the eigenvalue of the build's
/// Laplacian variant.
pub fn rayleigh_quotient(ops: &GraphOperators, u: &[f64]) -> Result<f64> {
    let n = ops.len() as f64;
    let m0 = ops.spec().m0;
    match ops.kind() {
        LaplacianKind::Unnormalized => {
            let p = ops.uniform_density().ok_or(LabError::NonUniformUnnormalized)?;
            let e = ops.dirichlet_form(u, FormVariant::Standard)?;
            let norm: f64 = u.iter().map(|x| x * x).sum();
            nonzero(norm)?;
            Ok(e / (p * norm / n))
        }
        LaplacianKind::RandomWalk => {
            let e = ops.dirichlet_form(u, FormVariant::Standard)?;
            let norm: f64 = u.iter().zip(ops.degrees().iter()).map(|(x, d)| x * x * d).sum();
            nonzero(norm)?;
            Ok(e / (norm / (m0 * n * n)))
        }
        LaplacianKind::DensityCorrected => {
            let e = ops.dirichlet_form(u, FormVariant::DensityCorrected)?;
            let td = ops.tilde_degrees().expect("density-corrected build");
            let norm: f64 = u.iter().zip(td.iter()).map(|(x, d)| x * x * d).sum();
            nonzero(norm)?;
            Ok(e / (m0 * norm))
        }
    }
}

fn nonzero(norm: f64) -> Result<()> {
    if norm > 0.0 {
        Ok(())
    } else {
        Err(LabError::ZeroDenominator("Rayleigh quotient of a zero vector"))
    }
}
