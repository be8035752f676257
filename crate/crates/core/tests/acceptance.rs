//! Acceptance gate. Each test prints one `criterion N: PASS|FAIL` line
//! with the measured values, then asserts. Sweeps shared by several
//! criteria run once. Artifacts go to `<target>/tmp/acceptance`.
//!
//! Run with `cargo test --release --test acceptance -- --nocapture` to
//! see the lines as they are produced.

use std::path::PathBuf;
use std::sync::OnceLock;

use laplab::analysis::{align_and_score, build_references, ReferenceConvention};
use laplab::eigen::{solve_lowest, Backend};
use laplab::graph::{build_affinity, KernelSpec, LaplacianKind};
use laplab::harness::validation::{local_gap_exponent, local_gaussian_gap, local_gaussian_peak_gap, LOCAL_GAP_TIMES};
use laplab::harness::{
    run, run_validation_suite, write_artifacts, write_validation, ExperimentConfig, Grid, RunOutcome, SweepResult,
    ValidationReport,
};
use laplab::manifold::{analytic_spectrum, sample, DensityModel, ManifoldModel};

fn config(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(format!("{name}.toml"));
    ExperimentConfig::from_path(path).expect("configuration loads")
}

fn artifact_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance")
}

fn sweep(name: &str) -> SweepResult {
    let c = config(name);
    let RunOutcome::Sweep(result) = run(&c).expect("sweep runs") else { panic!("{name} is not a sweep configuration") };
    write_artifacts(artifact_dir(), &result, true).expect("artifacts written");
    result
}

fn validation(name: &str) -> ValidationReport {
    let report = run_validation_suite(&config(name)).expect("suite runs");
    write_validation(artifact_dir(), &report).expect("report written");
    report
}

fn shared(cell: &'static OnceLock<SweepResult>, name: &str) -> &'static SweepResult {
    cell.get_or_init(|| sweep(name))
}

static FIG1: OnceLock<SweepResult> = OnceLock::new();
static FIG2: OnceLock<SweepResult> = OnceLock::new();

fn slope(result: &SweepResult, metric: &str) -> f64 {
    result.aggregate.metric(metric).and_then(|m| m.slope.as_ref()).map(|f| f.slope).unwrap_or(f64::NAN)
}

fn best_table(result: &SweepResult, metric: &str) -> String {
    let m = result.aggregate.metric(metric).expect("metric present");
    m.best.iter().map(|b| format!("N={} eps={:.2e} mean={:.4}", b.n, b.eps, b.mean)).collect::<Vec<_>>().join("; ")
}

fn sci(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.4e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn report(criterion: u32, passed: bool, detail: &str) {
    println!("criterion {criterion}: {} — {detail}", if passed { "PASS" } else { "FAIL" });
}

#[test]
fn criterion_1_circle_eigenvalue_slope() {
    let r = shared(&FIG1, "fig1");
    let s = slope(r, "rel_err_lambda");
    let passed = (-0.55..=-0.25).contains(&s);
    report(
        1,
        passed,
        &format!(
            "S¹ RelErr_lambda slope {s:.3} (band [-0.55, -0.25]); failures {}; best: {}",
            r.aggregate.failures,
            best_table(r, "rel_err_lambda")
        ),
    );
    assert!(passed);
}

#[test]
fn criterion_2_sphere_eigenvalue_slope() {
    let r = shared(&FIG2, "fig2");
    let s = slope(r, "rel_err_lambda");
    let passed = (-0.48..=-0.18).contains(&s);
    report(
        2,
        passed,
        &format!(
            "S² RelErr_lambda slope {s:.3} (band [-0.48, -0.18]); failures {}; best: {}",
            r.aggregate.failures,
            best_table(r, "rel_err_lambda")
        ),
    );
    assert!(passed);
}

#[test]
fn criterion_3_eigenvector_slopes() {
    let s1 = slope(shared(&FIG1, "fig1"), "rel_err_v");
    let s2 = slope(shared(&FIG2, "fig2"), "rel_err_v");
    let passed = s1 <= -0.3 && s2 <= -0.3;
    report(3, passed, &format!("RelErr_v slopes S¹ {s1:.3}, S² {s2:.3} (bound ≤ -0.3)"));
    assert!(passed);
}

#[test]
fn criterion_4_density_corrected_slopes() {
    let r = sweep("fig5");
    let sl = slope(&r, "rel_err_lambda");
    let sv = slope(&r, "rel_err_v");
    let passed = sl <= -0.5 && sv <= -0.5;
    report(
        4,
        passed,
        &format!(
            "non-uniform S¹, density-corrected: RelErr_lambda slope {sl:.3}, RelErr_v slope {sv:.3} (bound ≤ -0.5); best lambda: {}",
            best_table(&r, "rel_err_lambda")
        ),
    );
    assert!(passed);
}

#[test]
fn criterion_5_pointwise_two_branches() {
    let c = config("fig4");
    let eps = c.eps_values().unwrap().unwrap();
    let decades = (eps[eps.len() - 1] / eps[0]).log10();
    let r = sweep("fig4");
    let curve = &r.aggregate.curves[0];
    let small = curve.small_eps_slope.as_ref().map_or(f64::NAN, |f| f.slope);
    let large = curve.large_eps_slope.as_ref().map_or(f64::NAN, |f| f.slope);
    let passed = curve.n == 2000
        && c.replicas == 50
        && decades >= 2.5 - 1e-9
        && (-0.95..=-0.55).contains(&small)
        && (0.7..=1.3).contains(&large);
    report(
        5,
        passed,
        &format!(
            "N={}, {} replicas, eps spans {decades:.2} decades; small-eps slope {small:.3} (band [-0.95, -0.55]), large-eps slope {large:.3} (band [0.7, 1.3])",
            curve.n, c.replicas
        ),
    );
    assert!(passed);
}

fn strictly_decreasing(result: &SweepResult, metric: &str) -> (bool, Vec<f64>) {
    let means: Vec<f64> = result.aggregate.metric(metric).expect("metric").cells.iter().map(|c| c.mean).collect();
    (means.windows(2).all(|w| w[1] < w[0]), means)
}

#[test]
fn criterion_6_form_convergence() {
    let uniform = sweep("fig3");
    let corrected = sweep("fig3_dc");
    let (a, ma) = strictly_decreasing(&uniform, "form_rel_error");
    let (b, mb) = strictly_decreasing(&corrected, "form_abs_error");
    let ns = &uniform.aggregate.n_grid;
    let passed = a && b && ns == &[500, 1000, 2000, 4000];
    report(
        6,
        passed,
        &format!(
            "N = {ns:?}: uniform relative form error {ma:.4?} (decreasing {a}); density-corrected absolute form error {mb:.3?} (decreasing {b})"
        ),
    );
    assert!(passed);
}

fn failed_names(report: &ValidationReport, skip: &[&str]) -> Vec<String> {
    report
        .checks
        .iter()
        .filter(|c| !c.passed && !skip.contains(&c.name.as_str()))
        .map(|c| format!("{} ({:.3e} vs {:.1e})", c.name, c.measured, c.threshold))
        .collect()
}

#[test]
fn criterion_7_property_suites() {
    let mut failures = Vec::new();
    let mut checked = 0;
    // Heat-kernel identities; the local-approximation statistic is
    // criterion 8.
    for (name, skip) in [
        ("heat_s1", &["local_gaussian_approximation"][..]),
        ("heat_s2", &[][..]),
        ("degree_s1", &[][..]),
        ("degree_s1_dc", &[][..]),
    ] {
        let r = validation(name);
        checked += r.checks.len();
        failures.extend(failed_names(&r, skip).into_iter().map(|f| format!("{name}: {f}")));
    }

    // Dense and iterative eigensolvers agree on N = 500.
    let mut solver_gap: f64 = 0.0;
    for (density, kind, eps) in [
        (DensityModel::Uniform, LaplacianKind::Unnormalized, 1e-3),
        (DensityModel::Uniform, LaplacianKind::RandomWalk, 1e-3),
        (DensityModel::CircleNonUniform, LaplacianKind::DensityCorrected, 1e-3),
    ] {
        let s = sample(ManifoldModel::CircleR4, density, 500, 77).unwrap();
        let ops = build_affinity(&s, &KernelSpec::gaussian(eps, 1).unwrap(), kind).unwrap();
        let dense = solve_lowest(&ops, 9, Backend::Dense).unwrap();
        let iterative = solve_lowest(&ops, 9, Backend::Iterative).unwrap();
        let scale = dense.eigenvalues.iter().fold(1.0f64, |a, b| a.max(b.abs()));
        for (a, b) in dense.eigenvalues.iter().zip(&iterative.eigenvalues) {
            solver_gap = solver_gap.max((a - b).abs() / scale);
        }
    }
    if solver_gap > 1e-8 {
        failures.push(format!("dense vs iterative eigenvalues differ by {solver_gap:.2e}"));
    }

    // RelErr_v is invariant under rotations inside multiplicity blocks and
    // under sign flips of the computed eigenvectors.
    let model = ManifoldModel::CircleR4;
    let s = sample(model, DensityModel::Uniform, 800, 5).unwrap();
    let ops = build_affinity(&s, &KernelSpec::gaussian(3e-4, 1).unwrap(), LaplacianKind::RandomWalk).unwrap();
    let spectral = solve_lowest(&ops, 9, Backend::Iterative).unwrap();
    let sys = analytic_spectrum(model, 10);
    let refs = build_references(&s, &sys, 10, ReferenceConvention::PhiScaled).unwrap();
    let base = align_and_score(&spectral, &refs, &sys.eigenvalues, 9, 0.05).unwrap().rel_err_v;
    let mut moved = spectral.clone();
    for (block, angle) in [((1, 2), 0.7), ((3, 4), -2.1), ((7, 8), 1.3)] {
        let (c, sn) = (f64::cos(angle), f64::sin(angle));
        let a = moved.eigenvectors.column(block.0).clone_owned();
        let b = moved.eigenvectors.column(block.1).clone_owned();
        moved.eigenvectors.set_column(block.0, &(&a * c - &b * sn));
        moved.eigenvectors.set_column(block.1, &(&a * sn + &b * c));
    }
    for k in [2, 5, 6] {
        let flipped = -moved.eigenvectors.column(k).clone_owned();
        moved.eigenvectors.set_column(k, &flipped);
    }
    let rotated = align_and_score(&moved, &refs, &sys.eigenvalues, 9, 0.05).unwrap().rel_err_v;
    if (rotated - base).abs() > 1e-10 {
        failures.push(format!("RelErr_v changed under rotation/sign: {base} vs {rotated}"));
    }

    // Re-running one sweep cell reproduces it bit for bit, independent of
    // the worker count.
    let mut cell = config("fig1");
    cell.n_grid = Some(Grid::List(vec![562.0]));
    cell.eps_grid = Some(Grid::List(vec![3e-4]));
    cell.replicas = 1;
    cell.output.record_timings = false;
    let bits = |workers: usize| -> Vec<(String, u64, Option<u64>)> {
        let mut c = cell.clone();
        c.workers = Some(workers);
        let RunOutcome::Sweep(r) = run(&c).unwrap() else { unreachable!() };
        r.records.iter().map(|r| (r.metric.clone(), r.value.to_bits(), r.residual.map(f64::to_bits))).collect()
    };
    let first = bits(1);
    if first != bits(1) || first != bits(2) {
        failures.push("sweep cell is not bit-reproducible".into());
    }

    let passed = failures.is_empty();
    report(
        7,
        passed,
        &format!(
            "{checked} suite checks, solver agreement {solver_gap:.1e}, RelErr_v invariance |Δ| = {:.1e}, determinism re-run; failures: {failures:?}",
            (rotated - base).abs()
        ),
    );
    assert!(passed);
}

#[test]
fn criterion_8_local_gaussian_approximation() {
    let gaps: Vec<f64> = LOCAL_GAP_TIMES.iter().map(|&t| local_gaussian_gap(t)).collect();
    let exponent = local_gap_exponent(&LOCAL_GAP_TIMES, &gaps).unwrap_or(f64::NAN);
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    let passed = decreasing && exponent >= 0.8;
    report(
        8,
        passed,
        &format!(
            "max |H_t/K_t − 1| over ‖x−y‖ ≤ δ_t at t = {LOCAL_GAP_TIMES:?}: {gaps:.4?}, decreasing {decreasing}, exponent {exponent:.3} (bound ≥ 0.8)"
        ),
    );
    // Supplementary evidence, reported but not judged.
    let deep = [1e-8, 1e-9, 1e-10];
    let deep_gaps: Vec<f64> = deep.iter().map(|&t| local_gaussian_gap(t)).collect();
    println!(
        "criterion 8 (supplementary): same statistic at t = {deep:?}: {}, exponent {:.3}",
        sci(&deep_gaps),
        local_gap_exponent(&deep, &deep_gaps).unwrap_or(f64::NAN)
    );
    let peak: Vec<f64> = LOCAL_GAP_TIMES.iter().map(|&t| local_gaussian_peak_gap(t)).collect();
    println!(
        "criterion 8 (supplementary): peak-normalized gap max |H_t − K_t|/H_t(x,x) at t = {LOCAL_GAP_TIMES:?}: {}, exponent {:.3}",
        sci(&peak),
        local_gap_exponent(&LOCAL_GAP_TIMES, &peak).unwrap_or(f64::NAN)
    );
    assert!(passed, "local approximation statistic outside its band; see the supplementary lines");
}
