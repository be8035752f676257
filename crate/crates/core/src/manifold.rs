//! Benchmark manifolds with exact ground truth: the unit-length circle
//! isometrically embedded in R^4 and the unit sphere in R^3.
//!
//! Intrinsic coordinates are the arclength `t ∈ [0, 1)` on the circle and
//! the polar/azimuthal pair `(θ, φ)` on the sphere. Everything here is a
//! pure function of its inputs.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::rng::rng_from_seed;

const TAU: f64 = 2.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ManifoldModel {
    /// Circle of circumference 1, embedded in R^4 by
    /// `(cos 2πt, sin 2πt, ⅔ cos 6πt, ⅔ sin 6πt) / (2π√5)`.
    #[serde(rename = "s1")]
    CircleR4,
    /// Unit sphere in R^3.
    #[serde(rename = "s2")]
    SphereR3,
}

impl ManifoldModel {
    pub fn name(self) -> &'static str {
        match self {
            ManifoldModel::CircleR4 => "s1",
            ManifoldModel::SphereR3 => "s2",
        }
    }

    pub fn ambient_dim(self) -> usize {
        match self {
            ManifoldModel::CircleR4 => 4,
            ManifoldModel::SphereR3 => 3,
        }
    }

    pub fn intrinsic_dim(self) -> usize {
        match self {
            ManifoldModel::CircleR4 => 1,
            ManifoldModel::SphereR3 => 2,
        }
    }

    pub fn volume(self) -> f64 {
        match self {
            ManifoldModel::CircleR4 => 1.0,
            ManifoldModel::SphereR3 => 4.0 * PI,
        }
    }

    /// Writes the ambient image of intrinsic point `x` into `out`.
    pub fn embed_into(self, x: &[f64], out: &mut [f64]) {
        match self {
            ManifoldModel::CircleR4 => {
                let c = 1.0 / (TAU * 5f64.sqrt());
                let (s1, c1) = (TAU * x[0]).sin_cos();
                let (s3, c3) = (3.0 * TAU * x[0]).sin_cos();
                out[0] = c * c1;
                out[1] = c * s1;
                out[2] = c * 2.0 / 3.0 * c3;
                out[3] = c * 2.0 / 3.0 * s3;
            }
            ManifoldModel::SphereR3 => {
                let (st, ct) = x[0].sin_cos();
                let (sp, cp) = x[1].sin_cos();
                out[0] = st * cp;
                out[1] = st * sp;
                out[2] = ct;
            }
        }
    }

    pub fn embed(self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ambient_dim()];
        self.embed_into(x, &mut out);
        out
    }

    /// Exact geodesic distance, computed from intrinsic coordinates.
    pub fn geodesic_distance(self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            ManifoldModel::CircleR4 => {
                let d = (x[0] - y[0]).rem_euclid(1.0);
                d.min(1.0 - d)
            }
            ManifoldModel::SphereR3 => {
                let a = self.embed(x);
                let b = self.embed(y);
                let cross = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
                let sin = cross.iter().map(|c| c * c).sum::<f64>().sqrt();
                let cos: f64 = a.iter().zip(&b).map(|(p, q)| p * q).sum();
                sin.atan2(cos)
            }
        }
    }
}

/// Sampling density with respect to the Riemannian volume `dV`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DensityModel {
    #[serde(rename = "uniform")]
    Uniform,
    /// `p(t) = 1 + ½ sin(4πt) + 0.3 sin(10πt)` on the circle.
    #[serde(rename = "nonuniform")]
    CircleNonUniform,
}

impl DensityModel {
    pub fn name(self) -> &'static str {
        match self {
            DensityModel::Uniform => "uniform",
            DensityModel::CircleNonUniform => "nonuniform",
        }
    }

    pub fn is_uniform(self) -> bool {
        self == DensityModel::Uniform
    }

    pub fn check_compatible(self, model: ManifoldModel) -> Result<()> {
        match (self, model) {
            (DensityModel::CircleNonUniform, ManifoldModel::SphereR3) => {
                Err(LabError::IncompatibleDensity { manifold: model.name(), density: self.name() })
            }
            _ => Ok(()),
        }
    }

    pub fn value(self, model: ManifoldModel, x: &[f64]) -> f64 {
        match self {
            DensityModel::Uniform => 1.0 / model.volume(),
            DensityModel::CircleNonUniform => circle_density(x[0]),
        }
    }

    /// Analytic lower bound of `p` over the manifold.
    pub fn lower_bound(self, model: ManifoldModel) -> f64 {
        match self {
            DensityModel::Uniform => 1.0 / model.volume(),
            DensityModel::CircleNonUniform => 0.2,
        }
    }
}

fn circle_density(t: f64) -> f64 {
    1.0 + 0.5 * (2.0 * TAU * t).sin() + 0.3 * (5.0 * TAU * t).sin()
}

fn circle_cdf(t: f64) -> f64 {
    t + 0.5 / (2.0 * TAU) * (1.0 - (2.0 * TAU * t).cos()) + 0.3 / (5.0 * TAU) * (1.0 - (5.0 * TAU * t).cos())
}

const INVERSE_CDF_NODES: usize = 1 << 16;

/// Piecewise-cubic Hermite interpolant with Fritsch–Carlson slope limiting,
/// so monotone data give a monotone interpolant.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    /// `xs` strictly increasing, `ys` non-decreasing; `slopes` are the
    /// derivative estimates at the nodes before limiting.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, mut slopes: Vec<f64>) -> Self {
        assert!(xs.len() >= 2 && xs.len() == ys.len() && ys.len() == slopes.len());
        for k in 0..xs.len() - 1 {
            let delta = (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]);
            if delta == 0.0 {
                slopes[k] = 0.0;
                slopes[k + 1] = 0.0;
                continue;
            }
            let a = slopes[k] / delta;
            let b = slopes[k + 1] / delta;
            if a < 0.0 {
                slopes[k] = 0.0;
            }
            if b < 0.0 {
                slopes[k + 1] = 0.0;
            }
            let r = a * a + b * b;
            if r > 9.0 {
                let tau = 3.0 / r.sqrt();
                slopes[k] = tau * a * delta;
                slopes[k + 1] = tau * b * delta;
            }
        }
        MonotoneCubic { xs, ys, slopes }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let k = self.xs.partition_point(|&v| v <= x).clamp(1, n - 1) - 1;
        let h = self.xs[k + 1] - self.xs[k];
        let s = (x - self.xs[k]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.ys[k] + h10 * h * self.slopes[k] + h01 * self.ys[k + 1] + h11 * h * self.slopes[k + 1]
    }
}

/// Inverse CDF of the non-uniform circle density, tabulated once.
fn circle_inverse_cdf() -> &'static MonotoneCubic {
    static TABLE: OnceLock<MonotoneCubic> = OnceLock::new();
    TABLE.get_or_init(|| {
        let ts: Vec<f64> = (0..=INVERSE_CDF_NODES).map(|j| j as f64 / INVERSE_CDF_NODES as f64).collect();
        let us: Vec<f64> = ts.iter().map(|&t| circle_cdf(t)).collect();
        let slopes: Vec<f64> = ts.iter().map(|&t| 1.0 / circle_density(t)).collect();
        MonotoneCubic::new(us, ts, slopes)
    })
}

/// Points drawn i.i.d. from a density on a manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    model: ManifoldModel,
    density: DensityModel,
    seed: Option<u64>,
    intrinsic: Vec<f64>,
    ambient: Vec<f64>,
    density_values: Vec<f64>,
}

impl SampleSet {
    /// Builds a sample set from explicit intrinsic coordinates (row-major,
    /// `intrinsic_dim` values per point).
    pub fn from_intrinsic(model: ManifoldModel, density: DensityModel, intrinsic: Vec<f64>) -> Result<Self> {
        density.check_compatible(model)?;
        let d = model.intrinsic_dim();
        if intrinsic.is_empty() || !intrinsic.len().is_multiple_of(d) {
            return Err(LabError::InvalidArgument(format!(
                "intrinsic coordinate array of length {} is not a positive multiple of {d}",
                intrinsic.len()
            )));
        }
        let n = intrinsic.len() / d;
        let big_d = model.ambient_dim();
        let mut ambient = vec![0.0; n * big_d];
        let mut density_values = Vec::with_capacity(n);
        for i in 0..n {
            let x = &intrinsic[i * d..(i + 1) * d];
            model.embed_into(x, &mut ambient[i * big_d..(i + 1) * big_d]);
            density_values.push(density.value(model, x));
        }
        Ok(SampleSet { model, density, seed: None, intrinsic, ambient, density_values })
    }

    pub fn len(&self) -> usize {
        self.density_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.density_values.is_empty()
    }

    pub fn model(&self) -> ManifoldModel {
        self.model
    }

    pub fn density(&self) -> DensityModel {
        self.density
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn intrinsic(&self, i: usize) -> &[f64] {
        let d = self.model.intrinsic_dim();
        &self.intrinsic[i * d..(i + 1) * d]
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.model.ambient_dim();
        &self.ambient[i * d..(i + 1) * d]
    }

    /// Row-major `N × D` ambient coordinates.
    pub fn ambient(&self) -> &[f64] {
        &self.ambient
    }

    pub fn density_values(&self) -> &[f64] {
        &self.density_values
    }

    /// Evaluates `f` at every sample (the restriction operator `ρ_X`).
    pub fn restrict(&self, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
        (0..self.len()).map(|i| f(self.intrinsic(i))).collect()
    }
}

/// Draws `n` i.i.d. points from `density` on `model`.
pub fn sample(model: ManifoldModel, density: DensityModel, n: usize, seed: u64) -> Result<SampleSet> {
    density.check_compatible(model)?;
    if n == 0 {
        return Err(LabError::InvalidArgument("sample count must be positive".into()));
    }
    let mut rng = rng_from_seed(seed);
    let mut coords = Vec::with_capacity(n * model.intrinsic_dim());
    match (model, density) {
        (ManifoldModel::CircleR4, DensityModel::Uniform) => {
            coords.extend((0..n).map(|_| rng.random::<f64>()));
        }
        (ManifoldModel::CircleR4, DensityModel::CircleNonUniform) => {
            let table = circle_inverse_cdf();
            coords.extend((0..n).map(|_| table.eval(rng.random::<f64>()).rem_euclid(1.0)));
        }
        (ManifoldModel::SphereR3, DensityModel::Uniform) => {
            while coords.len() < 2 * n {
                let g: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
                let rho = g[0].hypot(g[1]);
                if rho == 0.0 && g[2] == 0.0 {
                    continue;
                }
                coords.push(rho.atan2(g[2]));
                coords.push(g[1].atan2(g[0]).rem_euclid(TAU));
            }
        }
        (ManifoldModel::SphereR3, DensityModel::CircleNonUniform) => unreachable!(),
    }
    let mut set = SampleSet::from_intrinsic(model, density, coords)?;
    set.seed = Some(seed);
    Ok(set)
}

/// Laplace–Beltrami eigenvalue `μ_k` (0-based `k`, so `k = 0` is `μ₁ = 0`).
pub fn eigenvalue(model: ManifoldModel, k: usize) -> f64 {
    match model {
        ManifoldModel::CircleR4 => {
            let j = k.div_ceil(2) as f64;
            (TAU * j).powi(2)
        }
        ManifoldModel::SphereR3 => {
            let l = k.isqrt() as f64;
            l * (l + 1.0)
        }
    }
}

/// Orthonormal Laplace–Beltrami eigenfunction `ψ_{k+1}` at intrinsic `x`.
///
/// Circle: `1, √2 cos 2πt, √2 sin 2πt, √2 cos 4πt, …`. Sphere: real
/// spherical harmonics ordered by degree, then `m = 0, cos 1, sin 1, …`.
pub fn eigenfunction(model: ManifoldModel, k: usize, x: &[f64]) -> f64 {
    match model {
        ManifoldModel::CircleR4 => {
            if k == 0 {
                return 1.0;
            }
            let j = k.div_ceil(2) as f64;
            let arg = TAU * j * x[0];
            if k % 2 == 1 {
                2f64.sqrt() * arg.cos()
            } else {
                2f64.sqrt() * arg.sin()
            }
        }
        ManifoldModel::SphereR3 => {
            let l = k.isqrt();
            let idx = k - l * l;
            let m = idx.div_ceil(2);
            let p = normalized_legendre(l, m, x[0].cos());
            if m == 0 {
                p
            } else if idx % 2 == 1 {
                2f64.sqrt() * p * (m as f64 * x[1]).cos()
            } else {
                2f64.sqrt() * p * (m as f64 * x[1]).sin()
            }
        }
    }
}

/// `sqrt((2l+1)/4π · (l-m)!/(l+m)!) P_l^m(x)` by the standard stable
/// recurrences (Condon–Shortley phase dropped).
pub fn normalized_legendre(l: usize, m: usize, x: f64) -> f64 {
    assert!(m <= l);
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = (1.0 / (4.0 * PI)).sqrt();
    for k in 1..=m {
        let k = k as f64;
        pmm *= ((2.0 * k + 1.0) / (2.0 * k)).sqrt() * s;
    }
    if l == m {
        return pmm;
    }
    let mf = m as f64;
    let mut p_prev = pmm;
    let mut p = (2.0 * mf + 3.0).sqrt() * x * pmm;
    for ll in (m + 2)..=l {
        let lf = ll as f64;
        let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
        let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
        let next = a * (x * p - b * p_prev);
        p_prev = p;
        p = next;
    }
    p
}

/// Legendre polynomials `P_0(x), …, P_lmax(x)`.
pub fn legendre_table(lmax: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(lmax + 1);
    out.push(1.0);
    if lmax >= 1 {
        out.push(x);
    }
    for l in 1..lmax {
        let lf = l as f64;
        let next = ((2.0 * lf + 1.0) * x * out[l] - lf * out[l - 1]) / (lf + 1.0);
        out.push(next);
    }
    out
}

/// The first `K` Laplace–Beltrami eigenpairs of a benchmark manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticEigensystem {
    pub model: ManifoldModel,
    /// Ascending, repeated according to multiplicity.
    pub eigenvalues: Vec<f64>,
    /// Count of each distinct eigenvalue within `eigenvalues`.
    pub multiplicities: Vec<usize>,
}

impl AnalyticEigensystem {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `ψ_{k+1}(x)` for 0-based `k < len()`.
    pub fn eigenfunction(&self, k: usize, x: &[f64]) -> f64 {
        assert!(k < self.len(), "eigenfunction index {k} out of range");
        eigenfunction(self.model, k, x)
    }
}

pub fn analytic_spectrum(model: ManifoldModel, k: usize) -> AnalyticEigensystem {
    let eigenvalues: Vec<f64> = (0..k).map(|i| eigenvalue(model, i)).collect();
    let mut multiplicities: Vec<usize> = Vec::new();
    for (i, mu) in eigenvalues.iter().enumerate() {
        if i > 0 && *mu == eigenvalues[i - 1] {
            *multiplicities.last_mut().unwrap() += 1;
        } else {
            multiplicities.push(1);
        }
    }
    AnalyticEigensystem { model, eigenvalues, multiplicities }
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(LabError::InvalidArgument(format!("diffusion time must be positive, got {t}")))
    }
}

/// Heat kernel `H_t(x, y)` of the manifold.
pub fn heat_kernel(model: ManifoldModel, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    check_time(t)?;
    Ok(heat_kernel_at_distance(model, t, model.geodesic_distance(x, y)))
}

/// Heat kernel as a function of geodesic distance (both benchmark
/// manifolds are homogeneous). `t` must be positive.
pub fn heat_kernel_at_distance(model: ManifoldModel, t: f64, distance: f64) -> f64 {
    match model {
        ManifoldModel::CircleR4 => wrapped_gaussian(t, distance),
        ManifoldModel::SphereR3 => sphere_heat_kernel(t, distance.cos()),
    }
}

fn wrapped_gaussian(t: f64, s: f64) -> f64 {
    let four_t = 4.0 * t;
    let mut sum = (-s * s / four_t).exp();
    let mut n = 1.0;
    loop {
        let a = (-(s + n).powi(2) / four_t).exp();
        let b = (-(s - n).powi(2) / four_t).exp();
        sum += a + b;
        if a + b <= 1e-16 * sum || n > 1e6 {
            break;
        }
        n += 1.0;
    }
    sum / (PI * four_t).sqrt()
}

fn sphere_heat_kernel(t: f64, cos_angle: f64) -> f64 {
    let x = cos_angle.clamp(-1.0, 1.0);
    let mut p_prev = 1.0;
    let mut p = x;
    let mut sum = 1.0 / (4.0 * PI);
    let mut l = 1usize;
    loop {
        let lf = l as f64;
        let weight = (-lf * (lf + 1.0) * t).exp() * (2.0 * lf + 1.0) / (4.0 * PI);
        if weight < 1e-14 || l > 1_000_000 {
            break;
        }
        sum += weight * p;
        let next = ((2.0 * lf + 1.0) * x * p - lf * p_prev) / (lf + 1.0);
        p_prev = p;
        p = next;
        l += 1;
    }
    // Cancellation in the alternating tail leaves ~1e-14 absolute noise.
    sum.max(0.0)
}

/// `G_t(x, y) = (4πt)^{-d/2} exp(-d_M(x, y)² / 4t)`.
pub fn gaussian_surrogate(model: ManifoldModel, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    check_time(t)?;
    let d = model.geodesic_distance(x, y);
    let dim = model.intrinsic_dim() as f64;
    Ok((4.0 * PI * t).powf(-dim / 2.0) * (-d * d / (4.0 * t)).exp())
}

/// A smooth function on a benchmark manifold with known Laplacian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TestFunction {
    /// `f(t) = 0.2 sin 4πt − 0.8 sin 8πt` on the circle.
    CircleTwoMode,
    /// Eigenfunction `ψ_{index+1}` scaled by `scale`.
    Eigenfunction {
        index: usize,
        scale: f64,
    },
    Constant {
        value: f64,
    },
}

impl TestFunction {
    pub fn check_compatible(&self, model: ManifoldModel) -> Result<()> {
        if matches!(self, TestFunction::CircleTwoMode) && model != ManifoldModel::CircleR4 {
            return Err(LabError::Config("the two-mode test function lives on s1".into()));
        }
        Ok(())
    }

    pub fn value(&self, model: ManifoldModel, x: &[f64]) -> f64 {
        match *self {
            TestFunction::CircleTwoMode => 0.2 * (2.0 * TAU * x[0]).sin() - 0.8 * (4.0 * TAU * x[0]).sin(),
            TestFunction::Eigenfunction { index, scale } => scale * eigenfunction(model, index, x),
            TestFunction::Constant { value } => value,
        }
    }

    /// `Δf(x)` with the sign convention `-Δ ≥ 0`.
    pub fn laplacian(&self, model: ManifoldModel, x: &[f64]) -> f64 {
        match *self {
            TestFunction::CircleTwoMode => {
                let w1 = 2.0 * TAU;
                let w2 = 4.0 * TAU;
                -0.2 * w1 * w1 * (w1 * x[0]).sin() + 0.8 * w2 * w2 * (w2 * x[0]).sin()
            }
            TestFunction::Eigenfunction { index, scale } => {
                -eigenvalue(model, index) * scale * eigenfunction(model, index, x)
            }
            TestFunction::Constant { .. } => 0.0,
        }
    }

    /// Arclength derivative on the circle; `None` on the sphere.
    pub fn circle_derivative(&self, model: ManifoldModel, x: &[f64]) -> Option<f64> {
        if model != ManifoldModel::CircleR4 {
            return None;
        }
        Some(match *self {
            TestFunction::CircleTwoMode => {
                let w1 = 2.0 * TAU;
                let w2 = 4.0 * TAU;
                0.2 * w1 * (w1 * x[0]).cos() - 0.8 * w2 * (w2 * x[0]).cos()
            }
            TestFunction::Eigenfunction { index, scale } => {
                if index == 0 {
                    0.0
                } else {
                    let j = index.div_ceil(2) as f64;
                    let w = TAU * j;
                    let r2 = 2f64.sqrt() * scale * w;
                    if index % 2 == 1 {
                        -r2 * (w * x[0]).sin()
                    } else {
                        r2 * (w * x[0]).cos()
                    }
                }
            }
            TestFunction::Constant { .. } => 0.0,
        })
    }
}
