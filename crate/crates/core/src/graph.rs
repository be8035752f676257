//! Kernel affinity matrices and the three graph-Laplacian variants built on
//! them, together with their Dirichlet forms.
//!
//! With `W_ij = K_ε(x_i, x_j)` and `D_i = Σ_j W_ij`:
//!
//! ```text
//! L_un  = (D − W) / ((m₂/2) p ε N)
//! L_rw  = (I − D⁻¹W) / (m̃ ε)
//! L̃_rw  = (I − D̃⁻¹W̃) / (m̃ ε),   W̃ = D⁻¹ W D⁻¹,  D̃_i = Σ_j W̃_ij
//! ```
//!
//! Storage is dense. `W̃` is never materialized; it is applied as
//! `D⁻¹ W D⁻¹`.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::manifold::{heat_kernel_at_distance, SampleSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelProfile {
    /// `h(ξ) = (4π)^{-d/2} e^{-ξ/4}`.
    Gaussian,
    /// `h(ξ) = 1` for `ξ < 1`, else 0.
    Indicator,
}

impl KernelProfile {
    pub fn name(self) -> &'static str {
        match self {
            KernelProfile::Gaussian => "gaussian",
            KernelProfile::Indicator => "indicator",
        }
    }
}

/// Bandwidth, intrinsic dimension and kernel profile, with the profile's
/// moments `m₀ = ∫ h(|u|²) du` and `m₂ = (1/d) ∫ |u|² h(|u|²) du`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub epsilon: f64,
    pub dim: usize,
    pub profile: KernelProfile,
    pub m0: f64,
    pub m2: f64,
    /// Opt-in sparsification: entries below `truncation · max W` are zeroed.
    pub truncation: Option<f64>,
}

impl KernelSpec {
    pub fn new(profile: KernelProfile, epsilon: f64, dim: usize) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(LabError::InvalidArgument(format!("kernel bandwidth must be positive, got {epsilon}")));
        }
        if dim == 0 {
            return Err(LabError::InvalidArgument("intrinsic dimension must be positive".into()));
        }
        let (m0, m2) = match profile {
            KernelProfile::Gaussian => (1.0, 2.0),
            KernelProfile::Indicator => {
                let ball = unit_ball_volume(dim);
                (ball, ball / (dim as f64 + 2.0))
            }
        };
        Ok(KernelSpec { epsilon, dim, profile, m0, m2, truncation: None })
    }

    pub fn gaussian(epsilon: f64, dim: usize) -> Result<Self> {
        Self::new(KernelProfile::Gaussian, epsilon, dim)
    }

    pub fn with_truncation(mut self, relative: f64) -> Self {
        self.truncation = Some(relative);
        self
    }

    /// `m̃ = m₂ / (2 m₀)`.
    pub fn m_tilde(&self) -> f64 {
        self.m2 / (2.0 * self.m0)
    }

    pub fn profile_value(&self, xi: f64) -> f64 {
        match self.profile {
            KernelProfile::Gaussian => (4.0 * PI).powf(-(self.dim as f64) / 2.0) * (-xi / 4.0).exp(),
            KernelProfile::Indicator => {
                if xi < 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `K_ε` as a function of squared ambient distance.
    pub fn kernel(&self, sq_dist: f64) -> f64 {
        self.epsilon.powf(-(self.dim as f64) / 2.0) * self.profile_value(sq_dist / self.epsilon)
    }

    /// `K_ε` with the constant factors hoisted, for assembly loops.
    fn evaluator(&self) -> impl Fn(f64) -> f64 + Sync {
        let scale = self.epsilon.powf(-(self.dim as f64) / 2.0);
        let profile = self.profile;
        let epsilon = self.epsilon;
        let gaussian = scale * (4.0 * PI).powf(-(self.dim as f64) / 2.0);
        let rate = 1.0 / (4.0 * epsilon);
        move |sq: f64| match profile {
            KernelProfile::Gaussian => gaussian * (-sq * rate).exp(),
            KernelProfile::Indicator => {
                if sq < epsilon {
                    scale
                } else {
                    0.0
                }
            }
        }
    }
}

fn unit_ball_volume(d: usize) -> f64 {
    // π^{d/2} / Γ(d/2 + 1) via the two-step recurrence V_d = 2π/d · V_{d-2}.
    let mut v = if d.is_multiple_of(2) { 1.0 } else { 2.0 };
    let mut k = if d.is_multiple_of(2) { 2 } else { 3 };
    while k <= d {
        v *= 2.0 * PI / k as f64;
        k += 2;
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LaplacianKind {
    #[serde(rename = "un")]
    Unnormalized,
    #[serde(rename = "rw")]
    RandomWalk,
    #[serde(rename = "dc")]
    DensityCorrected,
}

impl LaplacianKind {
    pub fn name(self) -> &'static str {
        match self {
            LaplacianKind::Unnormalized => "un",
            LaplacianKind::RandomWalk => "rw",
            LaplacianKind::DensityCorrected => "dc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FormVariant {
    /// `E_N(u) = (2/m₂) (ε N²)⁻¹ uᵀ(D − W)u`.
    Standard,
    /// `Ẽ_N(u) = (2 m₀²/m₂) ε⁻¹ uᵀ(D̃ − W̃)u`.
    DensityCorrected,
}

/// Affinity, degrees and the Laplacian variant selected at build time.
#[derive(Debug, Clone)]
pub struct GraphOperators {
    kind: LaplacianKind,
    spec: KernelSpec,
    w: DMatrix<f64>,
    degrees: DVector<f64>,
    tilde_degrees: Option<DVector<f64>>,
    uniform_density: Option<f64>,
    mean_density: f64,
}

/// Assembles the dense affinity `W_ij = K_ε(x_i, x_j)` (diagonal included)
/// and the degrees, and fixes the Laplacian variant.
pub fn build_affinity(samples: &SampleSet, spec: &KernelSpec, kind: LaplacianKind) -> Result<GraphOperators> {
    let n = samples.len();
    if n < 2 {
        return Err(LabError::InvalidArgument("need at least two samples".into()));
    }
    let dim = samples.model().ambient_dim();
    let pts = samples.ambient();
    let kernel = spec.evaluator();
    let mut data = vec![0.0; n * n];
    // Column j holds rows 0..=j of the upper triangle; the lower triangle
    // is copied from it so that W is exactly symmetric.
    data.par_chunks_mut(n).enumerate().for_each(|(j, col)| {
        let xj = &pts[j * dim..(j + 1) * dim];
        for (i, entry) in col.iter_mut().enumerate().take(j + 1) {
            let xi = &pts[i * dim..(i + 1) * dim];
            let sq: f64 = xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum();
            *entry = kernel(sq);
        }
    });
    for j in 0..n {
        for i in 0..j {
            data[i * n + j] = data[j * n + i];
        }
    }
    if let Some(rel) = spec.truncation {
        let cut = rel * data.iter().cloned().fold(0.0, f64::max);
        data.iter_mut().filter(|v| **v < cut).for_each(|v| *v = 0.0);
    }
    let w = DMatrix::from_vec(n, n, data);
    let degrees = DVector::from_iterator(n, w.column_iter().map(|c| c.sum()));
    // The self-loop keeps D_i ≥ W_ii > 0, so a sample counts as isolated
    // when it has no off-diagonal neighbour.
    if let Some(index) = (0..n).position(|i| degrees[i] - w[(i, i)] <= 0.0) {
        return Err(LabError::DisconnectedGraph { index });
    }
    let density = samples.density();
    let uniform_density = density.is_uniform().then(|| 1.0 / samples.model().volume());
    let tilde_degrees = (kind == LaplacianKind::DensityCorrected).then(|| {
        let inv = degrees.map(|d| 1.0 / d);
        let wd = &w * &inv;
        wd.component_mul(&inv)
    });
    if let Some(td) = &tilde_degrees {
        if let Some(index) = td.iter().position(|&d| d <= 0.0) {
            return Err(LabError::DisconnectedGraph { index });
        }
    }
    Ok(GraphOperators {
        kind,
        spec: *spec,
        w,
        degrees,
        tilde_degrees,
        uniform_density,
        mean_density: 1.0 / samples.model().volume(),
    })
}

/// Maximal deviations reported by [`GraphOperators::degree_diagnostic`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeReport {
    /// `max_i |D_i/N − m₀ p(x_i)|`.
    pub max_degree_deviation: f64,
    pub min_scaled_degree: f64,
    pub max_scaled_degree: f64,
    /// `max_i |Σ_j W_ij/D_j − 1|`, density-corrected builds only.
    pub max_denominator_deviation: Option<f64>,
    /// `max_i |Σ_j W̃_ij/D̃_i − 1|`, density-corrected builds only.
    pub max_tilde_row_sum_error: Option<f64>,
    pub tolerance: f64,
    pub degree_within_tolerance: bool,
    pub denominator_within_tolerance: Option<bool>,
}

/// The three heat-kernel quadratic forms, `q = q⁽⁰⁾ − q⁽²⁾`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatForms {
    pub q: f64,
    pub q0: f64,
    pub q2: f64,
}

impl GraphOperators {
    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    pub fn kind(&self) -> LaplacianKind {
        self.kind
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn affinity(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn degrees(&self) -> &DVector<f64> {
        &self.degrees
    }

    /// `D̃`, present for density-corrected builds.
    pub fn tilde_degrees(&self) -> Option<&DVector<f64>> {
        self.tilde_degrees.as_ref()
    }

    /// `W̃_ij = W_ij / (D_i D_j)`.
    pub fn tilde_affinity(&self, i: usize, j: usize) -> f64 {
        self.w[(i, j)] / (self.degrees[i] * self.degrees[j])
    }

    /// The constant `p` of a uniform sampling density, if uniform.
    pub fn uniform_density(&self) -> Option<f64> {
        self.uniform_density
    }

    /// `1/Vol(M)`; equals `p` for uniform sampling.
    pub fn mean_density(&self) -> f64 {
        self.mean_density
    }

    fn check_len(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.len() {
            return Err(LabError::DimensionMismatch { expected: self.len(), actual: u.len() });
        }
        Ok(())
    }

    /// Normalizing constant `c` with `L_un = (D − W)/c`.
    pub(crate) fn unnormalized_scale(&self) -> Result<f64> {
        let p = self.uniform_density.ok_or(LabError::NonUniformUnnormalized)?;
        Ok(self.spec.m2 / 2.0 * p * self.spec.epsilon * self.len() as f64)
    }

    /// `D⁻¹ W D⁻¹ u`.
    fn apply_tilde_affinity(&self, u: &DVector<f64>) -> DVector<f64> {
        let scaled = u.component_div(&self.degrees);
        (&self.w * scaled).component_div(&self.degrees)
    }

    /// `L u` for the variant fixed at build time.
    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_len(u)?;
        let u = DVector::from_column_slice(u);
        let out = match self.kind {
            LaplacianKind::Unnormalized => {
                let c = self.unnormalized_scale()?;
                (self.degrees.component_mul(&u) - &self.w * &u) / c
            }
            LaplacianKind::RandomWalk => {
                let walk = (&self.w * &u).component_div(&self.degrees);
                (u - walk) / (self.spec.m_tilde() * self.spec.epsilon)
            }
            LaplacianKind::DensityCorrected => {
                let td = self.tilde_degrees.as_ref().expect("density-corrected build");
                let walk = self.apply_tilde_affinity(&u).component_div(td);
                (u - walk) / (self.spec.m_tilde() * self.spec.epsilon)
            }
        };
        Ok(out.as_slice().to_vec())
    }

    /// `Σ_{i,j} c_ij (u_i − u_j)²` with `c_ij = W_ij` or `W̃_ij`.
    fn pairwise_energy(&self, u: &[f64], tilde: bool) -> f64 {
        let n = self.len();
        let mut total = 0.0;
        for j in 0..n {
            let col = self.w.column(j);
            let uj = u[j];
            let mut acc = 0.0;
            if tilde {
                for i in 0..j {
                    let d = u[i] - uj;
                    acc += col[i] / self.degrees[i] * d * d;
                }
                acc /= self.degrees[j];
            } else {
                for i in 0..j {
                    let d = u[i] - uj;
                    acc += col[i] * d * d;
                }
            }
            total += acc;
        }
        2.0 * total
    }

    /// `uᵀ(D − W)u`, computed as `½ Σ W_ij (u_i − u_j)²`.
    pub fn graph_energy(&self, u: &[f64]) -> Result<f64> {
        self.check_len(u)?;
        Ok(0.5 * self.pairwise_energy(u, false))
    }

    /// Graph Dirichlet form via the pairwise-difference sum.
    pub fn dirichlet_form(&self, u: &[f64], variant: FormVariant) -> Result<f64> {
        self.check_len(u)?;
        let spec = &self.spec;
        match variant {
            FormVariant::Standard => {
                let n = self.len() as f64;
                Ok(self.pairwise_energy(u, false) / (spec.m2 * spec.epsilon * n * n))
            }
            FormVariant::DensityCorrected => {
                if self.kind != LaplacianKind::DensityCorrected {
                    return Err(LabError::VariantMismatch { variant, kind: self.kind });
                }
                Ok(spec.m0 * spec.m0 / (spec.m2 * spec.epsilon) * self.pairwise_energy(u, true))
            }
        }
    }

    /// `B_N(u, v) = (E(u + v) − E(u − v)) / 4`.
    pub fn bilinear_form(&self, u: &[f64], v: &[f64], variant: FormVariant) -> Result<f64> {
        self.check_len(u)?;
        self.check_len(v)?;
        let plus: Vec<f64> = u.iter().zip(v).map(|(a, b)| a + b).collect();
        let minus: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
        Ok((self.dirichlet_form(&plus, variant)? - self.dirichlet_form(&minus, variant)?) / 4.0)
    }

    /// Degree concentration diagnostics against the sampling density.
    pub fn degree_diagnostic(&self, samples: &SampleSet, tolerance: f64) -> Result<DegreeReport> {
        let n = self.len();
        if samples.len() != n {
            return Err(LabError::DimensionMismatch { expected: n, actual: samples.len() });
        }
        let nf = n as f64;
        let p = samples.density_values();
        let mut max_dev: f64 = 0.0;
        let mut min_scaled = f64::INFINITY;
        let mut max_scaled = f64::NEG_INFINITY;
        for i in 0..n {
            let scaled = self.degrees[i] / nf;
            min_scaled = min_scaled.min(scaled);
            max_scaled = max_scaled.max(scaled);
            max_dev = max_dev.max((scaled - self.spec.m0 * p[i]).abs());
        }
        let (denominator, tilde_rows) = match &self.tilde_degrees {
            Some(td) => {
                let inv = self.degrees.map(|d| 1.0 / d);
                let den = &self.w * &inv;
                let max_den = den.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
                let rows = self.apply_tilde_affinity(&DVector::from_element(n, 1.0));
                let max_rows = rows.iter().zip(td.iter()).map(|(r, t)| (r / t - 1.0).abs()).fold(0.0, f64::max);
                (Some(max_den), Some(max_rows))
            }
            None => (None, None),
        };
        Ok(DegreeReport {
            max_degree_deviation: max_dev,
            min_scaled_degree: min_scaled,
            max_scaled_degree: max_scaled,
            max_denominator_deviation: denominator,
            max_tilde_row_sum_error: tilde_rows,
            tolerance,
            degree_within_tolerance: max_dev <= tolerance,
            denominator_within_tolerance: denominator.map(|d| d <= tolerance),
        })
    }

    /// Maximum over rows of `|Σ_j (D⁻¹W)_ij − 1|` (and the same for
    /// `D̃⁻¹W̃` on density-corrected builds).
    pub fn row_stochastic_error(&self) -> f64 {
        let n = self.len();
        let ones = DVector::from_element(n, 1.0);
        let rows = (&self.w * &ones).component_div(&self.degrees);
        let mut err = rows.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        if let Some(td) = &self.tilde_degrees {
            let rows = self.apply_tilde_affinity(&ones).component_div(td);
            err = rows.iter().map(|v| (v - 1.0).abs()).fold(err, f64::max);
        }
        err
    }

    /// Dense matrix of the selected Laplacian (for small problems and tests).
    pub fn laplacian_matrix(&self) -> Result<DMatrix<f64>> {
        let n = self.len();
        let mut cols = Vec::with_capacity(n * n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            cols.extend(self.apply(&e)?);
            e[j] = 0.0;
        }
        Ok(DMatrix::from_vec(n, n, cols))
    }
}

/// `q_s`, `q_s⁽⁰⁾` and `q_s⁽²⁾` of `u` with the exact heat kernel `H_s`
/// at the sample points. With `weighted`, `u_i` is replaced by
/// `u_i / p(x_i)`.
pub fn heat_quadratic_forms(samples: &SampleSet, s: f64, u: &[f64], weighted: bool) -> Result<HeatForms> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(LabError::InvalidArgument(format!("heat time must be positive, got {s}")));
    }
    let n = samples.len();
    if u.len() != n {
        return Err(LabError::DimensionMismatch { expected: n, actual: u.len() });
    }
    let model = samples.model();
    let v: Vec<f64> =
        if weighted { u.iter().zip(samples.density_values()).map(|(a, p)| a / p).collect() } else { u.to_vec() };
    let rows: Vec<(f64, f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = samples.intrinsic(i);
            let mut cross = 0.0;
            let mut row = 0.0;
            let mut diff = 0.0;
            for j in 0..n {
                let h = heat_kernel_at_distance(model, s, model.geodesic_distance(xi, samples.intrinsic(j)));
                cross += h * v[j];
                row += h;
                let d = v[i] - v[j];
                diff += h * d * d;
            }
            (v[i] * cross, v[i] * v[i] * row, diff)
        })
        .collect();
    let nf = n as f64;
    let q = rows.iter().map(|r| r.0).sum::<f64>() / (nf * nf);
    let q0 = rows.iter().map(|r| r.1).sum::<f64>() / (nf * nf);
    let q2 = 0.5 * rows.iter().map(|r| r.2).sum::<f64>() / (nf * nf);
    Ok(HeatForms { q, q0, q2 })
}

const MATRIX_MAGIC: &[u8; 8] = b"LAPLABM1";

/// Writes a square matrix as an 8-byte magic, the dimension as a
/// little-endian u64, then row-major little-endian f64 entries.
pub fn write_matrix(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    let path = path.as_ref();
    if m.nrows() != m.ncols() {
        return Err(LabError::InvalidArgument("matrix dump expects a square matrix".into()));
    }
    let n = m.nrows();
    let mut buf = Vec::with_capacity(16 + 8 * n * n);
    buf.extend_from_slice(MATRIX_MAGIC);
    buf.extend_from_slice(&(n as u64).to_le_bytes());
    for i in 0..n {
        for j in 0..n {
            buf.extend_from_slice(&m[(i, j)].to_le_bytes());
        }
    }
    let mut f = std::fs::File::create(path).map_err(|e| LabError::io(path, e))?;
    f.write_all(&buf).map_err(|e| LabError::io(path, e))
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    std::fs::File::open(path).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(|e| LabError::io(path, e))?;
    if bytes.len() < 16 || &bytes[..8] != MATRIX_MAGIC {
        return Err(LabError::InvalidArgument(format!("{}: not a matrix dump", path.display())));
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    if bytes.len() != 16 + 8 * n * n {
        return Err(LabError::InvalidArgument(format!("{}: truncated matrix dump", path.display())));
    }
    let vals = bytes[16..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    Ok(DMatrix::from_row_iterator(n, n, vals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{sample, DensityModel, ManifoldModel};

    fn circle(n: usize, seed: u64) -> SampleSet {
        sample(ManifoldModel::CircleR4, DensityModel::Uniform, n, seed).unwrap()
    }

    #[test]
    fn kernel_moments() {
        let g = KernelSpec::gaussian(0.1, 2).unwrap();
        assert_eq!((g.m0, g.m2, g.m_tilde()), (1.0, 2.0, 1.0));
        let i1 = KernelSpec::new(KernelProfile::Indicator, 0.1, 1).unwrap();
        assert!((i1.m0 - 2.0).abs() < 1e-15 && (i1.m2 - 2.0 / 3.0).abs() < 1e-15);
        let i2 = KernelSpec::new(KernelProfile::Indicator, 0.1, 2).unwrap();
        assert!((i2.m0 - PI).abs() < 1e-15 && (i2.m2 - PI / 4.0).abs() < 1e-15);
        assert!(KernelSpec::gaussian(0.0, 1).is_err());
    }

    #[test]
    fn indicator_moments_match_numerical_integrals() {
        // m2 = (1/d) ∫_{|u|<1} |u|² du, integrated on a fine 2-d grid.
        let m = 2000;
        let h = 2.0 / m as f64;
        let (mut m0, mut m2) = (0.0, 0.0);
        for a in 0..m {
            for b in 0..m {
                let x = -1.0 + (a as f64 + 0.5) * h;
                let y = -1.0 + (b as f64 + 0.5) * h;
                let r2 = x * x + y * y;
                if r2 < 1.0 {
                    m0 += h * h;
                    m2 += h * h * r2 / 2.0;
                }
            }
        }
        let spec = KernelSpec::new(KernelProfile::Indicator, 1.0, 2).unwrap();
        assert!((spec.m0 - m0).abs() < 1e-3);
        assert!((spec.m2 - m2).abs() < 1e-3);
    }

    #[test]
    fn gaussian_moments_match_numerical_integrals() {
        for d in [1usize, 2] {
            let spec = KernelSpec::gaussian(1.0, d).unwrap();
            // Composite Gauss–Legendre in the radial variable on [0, 30].
            let (nodes, weights) = crate::quadrature::gauss_legendre(20);
            let (mut m0, mut m2) = (0.0, 0.0);
            for cell in 0..30 {
                for (x, w) in nodes.iter().zip(&weights) {
                    let r = cell as f64 + 0.5 * (x + 1.0);
                    let shell = if d == 1 { 2.0 } else { 2.0 * PI * r };
                    let h = spec.profile_value(r * r) * 0.5 * w;
                    m0 += shell * h;
                    m2 += shell * r * r * h / d as f64;
                }
            }
            assert!((m0 - spec.m0).abs() < 1e-8 && (m2 - spec.m2).abs() < 1e-8);
        }
    }

    #[test]
    fn coincident_points() {
        let eps = 0.01;
        let s = SampleSet::from_intrinsic(ManifoldModel::CircleR4, DensityModel::Uniform, vec![0.2, 0.2]).unwrap();
        let ops = build_affinity(&s, &KernelSpec::gaussian(eps, 1).unwrap(), LaplacianKind::RandomWalk).unwrap();
        let w0 = (4.0 * PI * eps).powf(-0.5);
        assert!((ops.affinity()[(0, 1)] - w0).abs() < 1e-12 * w0);
        assert!((ops.degrees()[0] - 2.0 * w0).abs() < 1e-12 * w0);
        assert!((ops.degrees()[1] - 2.0 * w0).abs() < 1e-12 * w0);
        let report = ops.degree_diagnostic(&s, 0.1).unwrap();
        assert!((report.max_scaled_degree - w0).abs() < 1e-12 * w0);
    }

    #[test]
    fn indicator_support_is_strict() {
        let spec = KernelSpec::new(KernelProfile::Indicator, 0.01, 1).unwrap();
        assert_eq!(spec.kernel(0.01), 0.0);
        assert_eq!(spec.kernel(0.02), 0.0);
        assert!(spec.kernel(0.0099) > 0.0);
    }

    #[test]
    fn isolated_point_is_reported() {
        let s =
            SampleSet::from_intrinsic(ManifoldModel::CircleR4, DensityModel::Uniform, vec![0.0, 0.01, 0.5]).unwrap();
        let spec = KernelSpec::new(KernelProfile::Indicator, 1e-3, 1).unwrap();
        match build_affinity(&s, &spec, LaplacianKind::RandomWalk) {
            Err(LabError::DisconnectedGraph { index }) => assert_eq!(index, 2),
            other => panic!("expected disconnected graph, got {other:?}"),
        }
        let wide = KernelSpec::new(KernelProfile::Indicator, 1.0, 1).unwrap();
        assert!(build_affinity(&s, &wide, LaplacianKind::RandomWalk).is_ok());
    }

    #[test]
    fn affinity_is_symmetric_and_row_stochastic() {
        let s = sample(ManifoldModel::CircleR4, DensityModel::CircleNonUniform, 150, 5).unwrap();
        let ops = build_affinity(&s, &KernelSpec::gaussian(2e-3, 1).unwrap(), LaplacianKind::DensityCorrected).unwrap();
        let w = ops.affinity();
        for i in 0..w.nrows() {
            for j in 0..w.ncols() {
                assert_eq!(w[(i, j)], w[(j, i)]);
                assert!(w[(i, j)] >= 0.0);
            }
        }
        assert!(ops.row_stochastic_error() < 1e-12);
        let report = ops.degree_diagnostic(&s, 0.5).unwrap();
        assert!(report.max_tilde_row_sum_error.unwrap() < 1e-12);
    }

    #[test]
    fn constants_are_in_the_kernel() {
        let s = circle(80, 1);
        for kind in [LaplacianKind::Unnormalized, LaplacianKind::RandomWalk, LaplacianKind::DensityCorrected] {
            let ops = build_affinity(&s, &KernelSpec::gaussian(1e-3, 1).unwrap(), kind).unwrap();
            let lu = ops.apply(&vec![3.0; 80]).unwrap();
            let scale = 3.0 / ops.spec().epsilon;
            assert!(lu.iter().all(|v| v.abs() < 1e-12 * scale), "{kind:?}");
            assert_eq!(ops.dirichlet_form(&vec![3.0; 80], FormVariant::Standard).unwrap(), 0.0);
        }
    }

    #[test]
    fn unnormalized_needs_uniform_density() {
        let s = sample(ManifoldModel::CircleR4, DensityModel::CircleNonUniform, 20, 1).unwrap();
        let ops = build_affinity(&s, &KernelSpec::gaussian(1e-2, 1).unwrap(), LaplacianKind::Unnormalized).unwrap();
        assert!(matches!(ops.apply(&[0.0; 20]), Err(LabError::NonUniformUnnormalized)));
    }

    #[test]
    fn form_variant_must_match_kind() {
        let s = circle(10, 2);
        let ops = build_affinity(&s, &KernelSpec::gaussian(1e-2, 1).unwrap(), LaplacianKind::RandomWalk).unwrap();
        assert!(matches!(
            ops.dirichlet_form(&[1.0; 10], FormVariant::DensityCorrected),
            Err(LabError::VariantMismatch { .. })
        ));
        assert!(matches!(ops.apply(&[1.0; 9]), Err(LabError::DimensionMismatch { .. })));
    }

    #[test]
    fn pairwise_form_matches_explicit_assembly() {
        // Brute-force oracle: (2/m2)(ε N²)⁻¹ uᵀ(D − W)u from an explicit matrix.
        for n in 2..=12 {
            let s = circle(n, n as u64);
            let spec = KernelSpec::gaussian(5e-3, 1).unwrap();
            let ops = build_affinity(&s, &spec, LaplacianKind::RandomWalk).unwrap();
            let u: Vec<f64> = (0..n).map(|i| ((i * 7 + 3) % 11) as f64 - 4.5).collect();
            let mut quad = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let lij = if i == j { ops.degrees()[i] - ops.affinity()[(i, i)] } else { -ops.affinity()[(i, j)] };
                    quad += u[i] * lij * u[j];
                }
            }
            let brute = 2.0 / spec.m2 / (spec.epsilon * (n * n) as f64) * quad;
            let form = ops.dirichlet_form(&u, FormVariant::Standard).unwrap();
            assert!((form - brute).abs() <= 1e-12 * brute.abs().max(1e-300), "n = {n}");
        }
    }

    #[test]
    fn bilinear_form_polarizes() {
        let s = sample(ManifoldModel::CircleR4, DensityModel::CircleNonUniform, 60, 4).unwrap();
        let ops = build_affinity(&s, &KernelSpec::gaussian(2e-3, 1).unwrap(), LaplacianKind::DensityCorrected).unwrap();
        let u: Vec<f64> = (0..60).map(|i| (i as f64 * 0.37).sin()).collect();
        let v: Vec<f64> = (0..60).map(|i| (i as f64 * 0.11).cos()).collect();
        for variant in [FormVariant::Standard, FormVariant::DensityCorrected] {
            let e = ops.dirichlet_form(&u, variant).unwrap();
            let b = ops.bilinear_form(&u, &u, variant).unwrap();
            assert!((e - b).abs() <= 1e-10 * e);
            let uv = ops.bilinear_form(&u, &v, variant).unwrap();
            let vu = ops.bilinear_form(&v, &u, variant).unwrap();
            assert!((uv - vu).abs() <= 1e-12 * uv.abs().max(e));
        }
    }

    #[test]
    fn density_corrected_form_matches_quadratic_expression() {
        // (2 m0²/m2) ε⁻¹ uᵀ(D̃ − W̃)u, assembled explicitly.
        let n = 12;
        let s = sample(ManifoldModel::CircleR4, DensityModel::CircleNonUniform, n, 9).unwrap();
        let spec = KernelSpec::gaussian(3e-3, 1).unwrap();
        let ops = build_affinity(&s, &spec, LaplacianKind::DensityCorrected).unwrap();
        let u: Vec<f64> = (0..n).map(|i| (i as f64).sqrt()).collect();
        let td = ops.tilde_degrees().unwrap();
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                let lij = if i == j { td[i] } else { 0.0 } - ops.tilde_affinity(i, j);
                quad += u[i] * lij * u[j];
            }
        }
        let expect = 2.0 * spec.m0 * spec.m0 / (spec.m2 * spec.epsilon) * quad;
        let form = ops.dirichlet_form(&u, FormVariant::DensityCorrected).unwrap();
        assert!((form - expect).abs() < 1e-10 * expect);
    }

    #[test]
    fn heat_forms_decompose() {
        let s = circle(120, 8);
        let u: Vec<f64> = (0..120).map(|i| ((i * 13) % 17) as f64 / 17.0 - 0.4).collect();
        for weighted in [false, true] {
            let f = heat_quadratic_forms(&s, 2e-3, &u, weighted).unwrap();
            assert!((f.q - (f.q0 - f.q2)).abs() <= 1e-10 * (f.q0 + f.q2));
            assert!(f.q2 >= 0.0);
        }
        let c = heat_quadratic_forms(&s, 2e-3, &[1.5; 120], false).unwrap();
        assert_eq!(c.q2, 0.0);
        assert!(heat_quadratic_forms(&s, 0.0, &u, false).is_err());
    }

    #[test]
    fn matrix_dump_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.bin");
        let s = circle(7, 3);
        let ops = build_affinity(&s, &KernelSpec::gaussian(1e-2, 1).unwrap(), LaplacianKind::RandomWalk).unwrap();
        write_matrix(&path, ops.affinity()).unwrap();
        let len = std::fs::metadata(&path).unwrap().len();
        assert_eq!(len, 16 + 8 * 49);
        assert_eq!(&read_matrix(&path).unwrap(), ops.affinity());
    }
}
