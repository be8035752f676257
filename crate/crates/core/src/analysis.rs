//! Error metrics: eigenvalue and eigenvector relative errors with
//! multiplicity-block alignment, pointwise operator errors, and log-log
//! slope fits.

use std::ops::Range;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::eigen::SpectralResult;
use crate::error::{LabError, Result};
use crate::graph::GraphOperators;
use crate::manifold::{AnalyticEigensystem, SampleSet};

/// Scaling of the reference vectors built from analytic eigenfunctions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceConvention {
    /// `φ_k = ρ_X ψ_k / √(pN)` with `p = 1/Vol(M)`; pairs with the
    /// `Unit2Norm` and `DNormNp` eigenvector conventions.
    PhiScaled,
    /// `φ̃_k = ρ_X ψ_k / √N`; pairs with `TildeDNormRecipN`.
    TildePhi,
}

/// Analytic eigenfunctions restricted to the samples, as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceVectors {
    pub phi: DMatrix<f64>,
    pub convention: ReferenceConvention,
}

impl ReferenceVectors {
    pub fn len(&self) -> usize {
        self.phi.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.ncols() == 0
    }
}

/// Evaluates the first `k` analytic eigenfunctions at the samples.
pub fn build_references(
    samples: &SampleSet,
    eigensystem: &AnalyticEigensystem,
    k: usize,
    convention: ReferenceConvention,
) -> Result<ReferenceVectors> {
    if k > eigensystem.len() {
        return Err(LabError::InvalidArgument(format!(
            "{k} reference vectors requested from an eigensystem of size {}",
            eigensystem.len()
        )));
    }
    if samples.model() != eigensystem.model {
        return Err(LabError::InvalidArgument("eigensystem and samples live on different manifolds".into()));
    }
    let n = samples.len();
    let scale = match convention {
        ReferenceConvention::PhiScaled => 1.0 / (n as f64 / samples.model().volume()).sqrt(),
        ReferenceConvention::TildePhi => 1.0 / (n as f64).sqrt(),
    };
    let phi = DMatrix::from_fn(n, k, |i, j| scale * eigensystem.eigenfunction(j, samples.intrinsic(i)));
    Ok(ReferenceVectors { phi, convention })
}

/// Partitions ascending eigenvalues into multiplicity blocks: consecutive
/// values join a block when their gap is below `gap_rel_tol` times the
/// larger one.
pub fn multiplicity_blocks(mu: &[f64], gap_rel_tol: f64) -> Vec<Range<usize>> {
    let mut blocks = Vec::new();
    let mut start = 0;
    for i in 1..mu.len() {
        let gap = mu[i] - mu[i - 1];
        let size = mu[i].abs().max(mu[i - 1].abs());
        if gap > gap_rel_tol * size {
            blocks.push(start..i);
            start = i;
        }
    }
    if !mu.is_empty() {
        blocks.push(start..mu.len());
    }
    blocks
}

/// Procrustes alignment of one multiplicity block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockAlignment {
    /// 0-based eigenpair indices of the block.
    pub indices: Vec<usize>,
    /// Orthogonal `Q_m`, row-major, such that `V_m Q_m ≈ Φ_m`.
    pub rotation: Vec<Vec<f64>>,
}

/// Eigenvalue and eigenvector errors for one spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub blocks: Vec<BlockAlignment>,
    /// `⟨φ_k, (VQ)_k⟩ / ‖φ_k‖²` for every scored index.
    pub alpha: Vec<f64>,
    /// Indices whose `|α_k|` falls outside `[0.5, 2]`.
    pub alpha_flagged: Vec<usize>,
    /// `‖(VQ)_k − φ_k‖ / ‖φ_k‖` for `k = 0..k_max`.
    pub vector_errors: Vec<f64>,
    /// `|λ_k − μ_k| / μ_k` for `k = 1..k_max` (index 0 reported as 0).
    pub eigenvalue_errors: Vec<f64>,
    /// `Σ_{k=1}^{k_max−1} |λ_k − μ_k| / μ_k` (0-based; the constant mode is skipped).
    pub rel_err_lambda: f64,
    /// `Σ_{k=1}^{k_max−1} ‖(VQ)_k − φ_k‖ / ‖φ_k‖`.
    pub rel_err_v: f64,
}

/// Aligns the first `k_max` computed eigenvectors with the references,
/// block by block, and scores eigenvalue and eigenvector errors.
///
/// `k_max` counts eigenpairs including the constant one; `mu` must hold at
/// least `k_max + 1` values so that the cut after index `k_max − 1` can be
/// checked against the block structure. The rotation acts on the computed
/// vectors, so the score is invariant under any orthogonal change of basis
/// of a computed eigenspace, including sign flips.
pub fn align_and_score(
    spectral: &SpectralResult,
    refs: &ReferenceVectors,
    mu: &[f64],
    k_max: usize,
    gap_rel_tol: f64,
) -> Result<AlignmentReport> {
    if k_max < 2 {
        return Err(LabError::InvalidArgument("k_max must be at least 2".into()));
    }
    if spectral.len() < k_max || refs.len() < k_max {
        return Err(LabError::InvalidArgument(format!(
            "k_max = {k_max} needs {k_max} computed and reference vectors, got {} and {}",
            spectral.len(),
            refs.len()
        )));
    }
    if mu.len() <= k_max {
        return Err(LabError::InvalidArgument(format!(
            "k_max = {k_max} needs {} analytic eigenvalues to check block boundaries",
            k_max + 1
        )));
    }
    if spectral.eigenvectors.nrows() != refs.phi.nrows() {
        return Err(LabError::DimensionMismatch { expected: refs.phi.nrows(), actual: spectral.eigenvectors.nrows() });
    }
    let all_blocks = multiplicity_blocks(mu, gap_rel_tol);
    if let Some(block) = all_blocks.iter().find(|b| b.contains(&(k_max - 1)) && b.contains(&k_max)) {
        return Err(LabError::BlockStraddle {
            block_start: block.start + 1,
            block_end: block.end,
            k_max,
            suggested: block.end,
        });
    }

    let mut blocks = Vec::new();
    let mut rotated = DMatrix::zeros(refs.phi.nrows(), k_max);
    for block in all_blocks.iter().filter(|b| b.start < k_max) {
        let idx: Vec<usize> = block.clone().collect();
        let v = spectral.eigenvectors.select_columns(&idx);
        let phi = refs.phi.select_columns(&idx);
        let q = procrustes(&v, &phi);
        let vq = &v * &q;
        for (j, &k) in idx.iter().enumerate() {
            rotated.set_column(k, &vq.column(j));
        }
        blocks.push(BlockAlignment {
            indices: idx,
            rotation: q.row_iter().map(|r| r.iter().copied().collect()).collect(),
        });
    }

    let mut alpha = Vec::with_capacity(k_max);
    let mut vector_errors = Vec::with_capacity(k_max);
    for k in 0..k_max {
        let phi = refs.phi.column(k);
        let v = rotated.column(k);
        let norm2 = phi.norm_squared();
        if norm2 == 0.0 {
            return Err(LabError::ZeroDenominator("reference vector with zero norm"));
        }
        alpha.push(phi.dot(&v) / norm2);
        vector_errors.push((v - phi).norm() / norm2.sqrt());
    }
    let alpha_flagged = (0..k_max).filter(|&k| !(0.5..=2.0).contains(&alpha[k].abs())).collect();
    let eigenvalue_errors: Vec<f64> =
        (0..k_max).map(|k| if k == 0 { 0.0 } else { (spectral.eigenvalues[k] - mu[k]).abs() / mu[k] }).collect();
    Ok(AlignmentReport {
        blocks,
        rel_err_lambda: eigenvalue_errors[1..].iter().sum(),
        rel_err_v: vector_errors[1..].iter().sum(),
        alpha,
        alpha_flagged,
        vector_errors,
        eigenvalue_errors,
    })
}

/// Orthogonal `Q` minimizing `‖V Q − Φ‖_F`: `Q = U Wᵀ` from the SVD
/// `VᵀΦ = U Σ Wᵀ`.
pub fn procrustes(v: &DMatrix<f64>, phi: &DMatrix<f64>) -> DMatrix<f64> {
    let c = v.transpose() * phi;
    let svd = c.svd(true, true);
    svd.u.expect("requested U") * svd.v_t.expect("requested Vᵀ")
}

/// `‖−L ρ_X f − ρ_X Δf‖₁ / ‖ρ_X Δf‖₁`.
pub fn pointwise_error(ops: &GraphOperators, f_values: &[f64], laplacian_f_values: &[f64]) -> Result<f64> {
    if laplacian_f_values.len() != f_values.len() {
        return Err(LabError::DimensionMismatch { expected: f_values.len(), actual: laplacian_f_values.len() });
    }
    let lf = ops.apply(f_values)?;
    let denominator: f64 = laplacian_f_values.iter().map(|x| x.abs()).sum();
    if denominator == 0.0 {
        return Err(LabError::ZeroDenominator("Δf vanishes at every sample"));
    }
    let numerator: f64 = lf.iter().zip(laplacian_f_values).map(|(a, b)| (-a - b).abs()).sum();
    Ok(numerator / denominator)
}

/// Least-squares line through `(log₁₀ x, log₁₀ y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares on log₁₀-transformed data.
pub fn fit_loglog_slope(xs: &[f64], ys: &[f64]) -> Result<SlopeFit> {
    if xs.len() != ys.len() {
        return Err(LabError::DimensionMismatch { expected: xs.len(), actual: ys.len() });
    }
    if xs.len() < 2 {
        return Err(LabError::InvalidArgument("a slope fit needs at least two points".into()));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(LabError::InvalidArgument("log-log fit needs positive finite data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.log10()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.log10()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(LabError::InvalidArgument("log-log fit needs at least two distinct x values".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(SlopeFit { slope, intercept, r2 })
}
