//! Diagnostic suites: heat-kernel identities and local Gaussian
//! approximation, degree concentration, row-stochasticity, heat quadratic
//! forms and their scaling against the graph energy.

use std::f64::consts::{PI, TAU};

use nalgebra::SymmetricEigen;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind};
use crate::analysis::fit_loglog_slope;
use crate::eigen::{solve_lowest, Backend};
use crate::error::{LabError, Result};
use crate::graph::{build_affinity, heat_quadratic_forms, KernelSpec, LaplacianKind};
use crate::manifold::{heat_kernel, heat_kernel_at_distance, sample, ManifoldModel, SampleSet};
use crate::quadrature::{circle_nodes, gauss_legendre, sphere_nodes};
use crate::rng::{cell_seed, rng_from_seed};

/// Outcome of one diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// The measured statistic.
    pub measured: f64,
    /// The bound it is compared with.
    pub threshold: f64,
    pub detail: String,
}

impl CheckResult {
    fn at_most(name: &str, measured: f64, threshold: f64, detail: impl Into<String>) -> Self {
        CheckResult {
            name: name.to_string(),
            passed: measured <= threshold,
            measured,
            threshold,
            detail: detail.into(),
        }
    }

    fn at_least(name: &str, measured: f64, threshold: f64, detail: impl Into<String>) -> Self {
        CheckResult {
            name: name.to_string(),
            passed: measured >= threshold,
            measured,
            threshold,
            detail: detail.into(),
        }
    }
}

/// All checks of one validation run. Failures are entries, not errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub name: String,
    pub experiment: String,
    pub manifold: String,
    pub checks: Vec<CheckResult>,
    /// Diagnostics that are reported but not judged.
    pub supplementary: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().chain(&self.supplementary).find(|c| c.name == name)
    }
}

/// Runs the heat-kernel or degree suite selected by `config.experiment`.
pub fn run_validation_suite(config: &ExperimentConfig) -> Result<ValidationReport> {
    config.validate()?;
    let (checks, supplementary) = match config.experiment {
        ExperimentKind::HeatKernelCheck => heat_kernel_checks(config.manifold),
        ExperimentKind::DegreeCheck => degree_checks(config)?,
        other => return Err(LabError::Config(format!("`{}` is not a validation experiment", other.name()))),
    };
    Ok(ValidationReport {
        name: config.name.clone(),
        experiment: config.experiment.name().to_string(),
        manifold: config.manifold.name().to_string(),
        checks,
        supplementary,
    })
}

/// Times at which the local-approximation statistic is evaluated.
pub const LOCAL_GAP_TIMES: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// Radius `δ_t = sqrt(6(10 + d/2) t log(1/t))` of the local window.
pub fn local_window_radius(d: usize, t: f64) -> f64 {
    (6.0 * (10.0 + d as f64 / 2.0) * t * (1.0 / t).ln()).sqrt()
}

/// Max of `|H_t/K_t − 1|` on the circle over pairs with ambient distance
/// at most `δ_t`, where `K_t` is the Gaussian graph kernel at bandwidth
/// `t` evaluated on the ambient (chordal) distance. The embedding makes
/// both kernels functions of the parameter difference only, so pairs
/// reduce to differences on a fine grid.
pub fn local_gaussian_gap(t: f64) -> f64 {
    let model = ManifoldModel::CircleR4;
    let delta = local_window_radius(1, t);
    let spec = KernelSpec::gaussian(t, 1).expect("positive time");
    let origin = model.embed(&[0.0]);
    let steps = 20_000;
    (0..=steps)
        .map(|i| 0.5 * i as f64 / steps as f64)
        .filter_map(|s| {
            let p = model.embed(&[s]);
            let chord2: f64 = p.iter().zip(&origin).map(|(a, b)| (a - b) * (a - b)).sum();
            (chord2.sqrt() <= delta).then(|| {
                let h = heat_kernel_at_distance(model, t, s);
                (h / spec.kernel(chord2) - 1.0).abs()
            })
        })
        .fold(0.0, f64::max)
}

/// As [`local_gaussian_gap`] but with the gap normalized by the kernel
/// peak: `max |H_t − K_t| / H_t(x, x)`.
pub fn local_gaussian_peak_gap(t: f64) -> f64 {
    let model = ManifoldModel::CircleR4;
    let delta = local_window_radius(1, t);
    let spec = KernelSpec::gaussian(t, 1).expect("positive time");
    let origin = model.embed(&[0.0]);
    let peak = heat_kernel_at_distance(model, t, 0.0);
    let steps = 20_000;
    (0..=steps)
        .map(|i| 0.5 * i as f64 / steps as f64)
        .filter_map(|s| {
            let p = model.embed(&[s]);
            let chord2: f64 = p.iter().zip(&origin).map(|(a, b)| (a - b) * (a - b)).sum();
            (chord2.sqrt() <= delta).then(|| (heat_kernel_at_distance(model, t, s) - spec.kernel(chord2)).abs() / peak)
        })
        .fold(0.0, f64::max)
}

/// Log-log exponent of `gaps` against `t (log 1/t)²`.
pub fn local_gap_exponent(times: &[f64], gaps: &[f64]) -> Result<f64> {
    let xs: Vec<f64> = times.iter().map(|t| t * (1.0 / t).ln().powi(2)).collect();
    Ok(fit_loglog_slope(&xs, gaps)?.slope)
}

fn local_gap_check(name: &str, times: &[f64], gaps: &[f64], detail: &str) -> CheckResult {
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    let exponent = local_gap_exponent(times, gaps).unwrap_or(f64::NAN);
    CheckResult {
        name: name.to_string(),
        passed: decreasing && exponent >= 0.8,
        measured: exponent,
        threshold: 0.8,
        detail: format!("{detail}; t = {times:?}, max gaps = {gaps:?}, decreasing = {decreasing}"),
    }
}

fn heat_kernel_checks(model: ManifoldModel) -> (Vec<CheckResult>, Vec<CheckResult>) {
    let mut checks = Vec::new();
    let mut supplementary = Vec::new();
    let mut rng = rng_from_seed(0x4EA7);
    let point = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
        match model {
            ManifoldModel::CircleR4 => vec![rng.random::<f64>()],
            ManifoldModel::SphereR3 => vec![(2.0 * rng.random::<f64>() - 1.0).acos(), TAU * rng.random::<f64>()],
        }
    };

    // Positivity and symmetry on random pairs.
    let times: &[f64] = match model {
        ManifoldModel::CircleR4 => &[1e-2, 1e-3, 1e-4],
        ManifoldModel::SphereR3 => &[1e-1, 1e-2, 1e-3],
    };
    let (mut min_value, mut asym): (f64, f64) = (f64::INFINITY, 0.0);
    for _ in 0..200 {
        let (x, y) = (point(&mut rng), point(&mut rng));
        for &t in times {
            let a = heat_kernel(model, t, &x, &y).expect("positive time");
            let b = heat_kernel(model, t, &y, &x).expect("positive time");
            min_value = min_value.min(a);
            asym = asym.max((a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE));
        }
    }
    checks.push(CheckResult::at_least("heat_positivity", min_value, 0.0, "min H_t over 200 random pairs"));
    checks.push(CheckResult::at_most("heat_symmetry", asym, 1e-14, "max relative |H_t(x,y) − H_t(y,x)|"));

    // Mass: ∫ H_t(x, y) dV(y) = 1.
    let mut mass_err: f64 = 0.0;
    for &t in times {
        let mass = match model {
            ManifoldModel::CircleR4 => circle_nodes(20_000)
                .map(|(y, w)| w * heat_kernel_at_distance(model, t, model.geodesic_distance(&[0.3], &[y])))
                .sum::<f64>(),
            // Rotate x to the pole; the integral reduces to one in cos θ.
            ManifoldModel::SphereR3 => {
                let (z, w) = gauss_legendre(2000);
                TAU * z
                    .iter()
                    .zip(&w)
                    .map(|(z, w)| w * heat_kernel_at_distance(model, t, z.clamp(-1.0, 1.0).acos()))
                    .sum::<f64>()
            }
        };
        mass_err = mass_err.max((mass - 1.0).abs());
    }
    checks.push(CheckResult::at_most("heat_mass", mass_err, 1e-8, format!("max |∫H_t dV − 1| over t = {times:?}")));

    // Semigroup: ∫ H_t(x,y) H_t(y,z) dV(y) = H_2t(x,z).
    let (t, nodes): (f64, Vec<(Vec<f64>, f64)>) = match model {
        ManifoldModel::CircleR4 => (1e-3, circle_nodes(20_000).map(|(y, w)| (vec![y], w)).collect()),
        ManifoldModel::SphereR3 => (5e-2, sphere_nodes(120, 240).into_iter().map(|(y, w)| (y.to_vec(), w)).collect()),
    };
    let mut semi_err: f64 = 0.0;
    for _ in 0..3 {
        let x = point(&mut rng);
        let z = point(&mut rng);
        let lhs: f64 = nodes
            .iter()
            .map(|(y, w)| w * heat_kernel(model, t, &x, y).unwrap() * heat_kernel(model, t, y, &z).unwrap())
            .sum();
        let rhs = heat_kernel(model, 2.0 * t, &x, &z).unwrap();
        let peak = heat_kernel(model, 2.0 * t, &x, &x).unwrap();
        semi_err = semi_err.max((lhs - rhs).abs() / peak);
    }
    checks.push(CheckResult::at_most(
        "heat_semigroup",
        semi_err,
        1e-6,
        format!("max |∫H_t H_t − H_2t| / H_2t(x,x) at t = {t}"),
    ));

    match model {
        ManifoldModel::CircleR4 => {
            // Wrapped Gaussian against the Fourier series.
            let t = 1e-2;
            let mut gap: f64 = 0.0;
            for i in 0..50 {
                let s = 0.5 * i as f64 / 49.0;
                let spectral = 1.0
                    + 2.0
                        * (1..200)
                            .map(|j| {
                                let w = TAU * j as f64;
                                (-w * w * t).exp() * (w * s).cos()
                            })
                            .sum::<f64>();
                let wrapped = heat_kernel_at_distance(model, t, s);
                gap = gap.max((wrapped - spectral).abs());
            }
            checks.push(CheckResult::at_most(
                "heat_wrapped_vs_spectral",
                gap,
                1e-10,
                "max |wrapped − spectral| at t = 0.01",
            ));

            let gaps: Vec<f64> = LOCAL_GAP_TIMES.iter().map(|&t| local_gaussian_gap(t)).collect();
            checks.push(local_gap_check(
                "local_gaussian_approximation",
                &LOCAL_GAP_TIMES,
                &gaps,
                "max |H_t/K_t − 1| over pairs with ‖x−y‖ ≤ δ_t",
            ));
            let deep = [1e-8, 1e-9, 1e-10];
            let deep_gaps: Vec<f64> = deep.iter().map(|&t| local_gaussian_gap(t)).collect();
            supplementary.push(local_gap_check(
                "local_gaussian_approximation_small_t",
                &deep,
                &deep_gaps,
                "same statistic once δ_t is small against the curvature radius",
            ));
            let peak: Vec<f64> = LOCAL_GAP_TIMES.iter().map(|&t| local_gaussian_peak_gap(t)).collect();
            supplementary.push(local_gap_check(
                "local_gaussian_peak_normalized",
                &LOCAL_GAP_TIMES,
                &peak,
                "max |H_t − K_t| / H_t(x,x) over the δ_t window",
            ));
        }
        ManifoldModel::SphereR3 => {
            // Global decay H_t ≤ C t^{-d/2} exp(−d_M²/5t) at antipodes, for
            // times where H_t is above the double-precision floor.
            let mut worst: f64 = 0.0;
            for t in [0.2, 0.1] {
                let h = heat_kernel_at_distance(model, t, PI);
                worst = worst.max(h / (t.recip() * (-PI * PI / (5.0 * t)).exp()));
            }
            checks.push(CheckResult::at_most(
                "heat_global_decay",
                worst,
                1.0,
                "max H_t(antipodes) / (t^{-1} e^{-π²/5t}) over t ∈ {0.2, 0.1}",
            ));
        }
    }
    (checks, supplementary)
}

fn degree_checks(config: &ExperimentConfig) -> Result<(Vec<CheckResult>, Vec<CheckResult>)> {
    let ns = config.n_values()?;
    let eps = config.eps_values()?.expect("validated");
    let mut checks = Vec::new();
    let mut supplementary = Vec::new();
    let d = config.manifold.intrinsic_dim();
    for (i, &n) in ns.iter().enumerate() {
        for (j, &e) in eps.iter().enumerate() {
            let tag = format!("N={n},eps={e:e}");
            let samples = sample(config.manifold, config.density, n, cell_seed(config.base_seed, 0, i, j))?;
            let spec = KernelSpec::new(config.kernel, e, d)?;
            let ops = build_affinity(&samples, &spec, config.laplacian)?;
            let w = ops.affinity();
            let asym = (0..n)
                .flat_map(|a| (0..a).map(move |b| (a, b)))
                .map(|(a, b)| (w[(a, b)] - w[(b, a)]).abs())
                .fold(0.0, f64::max);
            let min_w = w.iter().cloned().fold(f64::INFINITY, f64::min);
            checks.push(CheckResult::at_most(&format!("w_symmetric[{tag}]"), asym, 0.0, "max |W_ij − W_ji|"));
            checks.push(CheckResult::at_least(&format!("w_nonnegative[{tag}]"), min_w, 0.0, "min W_ij"));
            checks.push(CheckResult::at_most(
                &format!("row_stochastic[{tag}]"),
                ops.row_stochastic_error(),
                1e-12,
                "max row-sum error of D⁻¹W (and D̃⁻¹W̃)",
            ));
            let report = ops.degree_diagnostic(&samples, config.degree_tolerance)?;
            checks.push(CheckResult::at_most(
                &format!("degree_band[{tag}]"),
                report.max_degree_deviation,
                config.degree_tolerance,
                format!(
                    "max |D_i/N − m₀p(x_i)|; D_i/N ∈ [{:.4}, {:.4}]",
                    report.min_scaled_degree, report.max_scaled_degree
                ),
            ));
            if let Some(den) = report.max_denominator_deviation {
                checks.push(CheckResult::at_most(
                    &format!("denominator_band[{tag}]"),
                    den,
                    config.degree_tolerance,
                    "max |Σ_j W_ij/D_j − 1|",
                ));
            }
            let spectral = solve_lowest(&ops, 1, Backend::Iterative)?;
            let scale = spectral.eigenvalues[1].abs().max(1.0);
            let v0 = spectral.eigenvectors.column(0);
            let mean = v0.mean();
            let spread = v0.iter().map(|x| (x - mean).abs()).fold(0.0, f64::max) / mean.abs();
            checks.push(CheckResult::at_most(
                &format!("lambda1_zero[{tag}]"),
                spectral.eigenvalues[0].abs() / scale,
                1e-8,
                "|λ₁| / max(λ₂, 1)",
            ));
            checks.push(CheckResult::at_most(
                &format!("first_vector_constant[{tag}]"),
                spread,
                1e-6,
                "max |v₁ − mean| / |mean|",
            ));
        }
    }

    // Heavier checks on a subsample of the first grid cell.
    let cap = match config.manifold {
        ManifoldModel::CircleR4 => 1000,
        ManifoldModel::SphereR3 => 200,
    };
    let n = ns[0].min(cap);
    let e = eps[0];
    let samples = sample(config.manifold, config.density, n, cell_seed(config.base_seed, 0, 0, 0))?;
    quadratic_form_checks(config, &samples, e, &mut checks)?;
    if config.density.is_uniform() {
        let small = sample(config.manifold, config.density, n.min(300), cell_seed(config.base_seed, 1, 0, 0))?;
        let spec = KernelSpec::new(config.kernel, e, d)?;
        let ops = build_affinity(&small, &spec, LaplacianKind::Unnormalized)?;
        let l = ops.laplacian_matrix()?;
        let norm = l.norm();
        let min = SymmetricEigen::new(l).eigenvalues.min();
        checks.push(CheckResult::at_least(
            "laplacian_un_psd",
            min / norm,
            -1e-8,
            format!("min eigenvalue of L_un / ‖L_un‖_F at N={}, eps={e:e}", small.len()),
        ));
        heat_form_scaling_check(config, &samples, e, &mut supplementary, &mut checks)?;
    }
    Ok((checks, supplementary))
}

fn quadratic_form_checks(
    config: &ExperimentConfig,
    samples: &SampleSet,
    s: f64,
    checks: &mut Vec<CheckResult>,
) -> Result<()> {
    let n = samples.len().min(200);
    let sub = SampleSet::from_intrinsic(
        samples.model(),
        samples.density(),
        (0..n).flat_map(|i| samples.intrinsic(i).to_vec()).collect(),
    )?;
    let mut rng = rng_from_seed(config.base_seed ^ 0x9F0E);
    let weighted = !config.density.is_uniform();
    let (mut identity, mut min_q2): (f64, f64) = (0.0, f64::INFINITY);
    for _ in 0..100 {
        let u: Vec<f64> = (0..n).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
        let f = heat_quadratic_forms(&sub, s, &u, weighted)?;
        identity = identity.max((f.q - (f.q0 - f.q2)).abs() / f.q0.abs().max(f.q.abs()));
        min_q2 = min_q2.min(f.q2);
    }
    let constant = heat_quadratic_forms(&sub, s, &vec![1.0; n], false)?;
    checks.push(CheckResult::at_most(
        "qs_decomposition",
        identity,
        1e-10,
        format!("max relative |q_s − (q⁽⁰⁾ − q⁽²⁾)| over 100 random u, N={n}"),
    ));
    checks.push(CheckResult::at_least("qs2_nonnegative", min_q2, 0.0, "min q⁽²⁾_s over 100 random u"));
    checks.push(CheckResult::at_most("qs2_constant_zero", constant.q2.abs(), 0.0, "q⁽²⁾_s(1)"));
    Ok(())
}

/// `q⁽²⁾_{αε}(v) ≤ 1.1 α^{-d/2} vᵀ(D − W)v / N²` for eigenvectors `v`.
fn heat_form_scaling_check(
    config: &ExperimentConfig,
    samples: &SampleSet,
    eps: f64,
    supplementary: &mut Vec<CheckResult>,
    checks: &mut Vec<CheckResult>,
) -> Result<()> {
    let d = config.manifold.intrinsic_dim() as f64;
    let spec = KernelSpec::new(config.kernel, eps, config.manifold.intrinsic_dim())?;
    let ops = build_affinity(samples, &spec, LaplacianKind::Unnormalized)?;
    let spectral = solve_lowest(&ops, 4, Backend::Iterative)?;
    let n2 = (samples.len() as f64).powi(2);
    let mut worst: f64 = 0.0;
    for alpha in [0.25, 0.5] {
        for k in 1..5 {
            let v: Vec<f64> = spectral.eigenvectors.column(k).iter().copied().collect();
            let q2 = heat_quadratic_forms(samples, alpha * eps, &v, false)?.q2;
            let bound = alpha.powf(-d / 2.0) * ops.graph_energy(&v)? / n2;
            worst = worst.max(q2 / bound);
        }
    }
    let result = CheckResult::at_most(
        "heat_form_scaling",
        worst,
        1.1,
        format!(
            "max q⁽²⁾_(αε)(v) / (α^(-d/2) vᵀ(D−W)v/N²) over α ∈ {{0.25, 0.5}}, v = v₂..v₅, N={}, eps={eps:e}",
            samples.len()
        ),
    );
    if config.kernel == crate::graph::KernelProfile::Gaussian {
        checks.push(result);
    } else {
        supplementary.push(result);
    }
    Ok(())
}
