//! Replica sweeps over `(N, ε)` grids, with deterministic seeding,
//! failure isolation and aggregation.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind};
use crate::analysis::{
    align_and_score, build_references, fit_loglog_slope, pointwise_error, ReferenceConvention, SlopeFit,
};
use crate::eigen::solve_lowest;
use crate::error::{LabError, Result};
use crate::graph::{build_affinity, FormVariant, KernelSpec, LaplacianKind};
use crate::manifold::{analytic_spectrum, sample, ManifoldModel, SampleSet, TestFunction};
use crate::quadrature::{circle_nodes, sphere_nodes};
use crate::rng::cell_seed;

/// Metric name written for cells that failed.
pub const FAILED_METRIC: &str = "failed";

/// One row of the results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub experiment: String,
    pub manifold: String,
    pub density: String,
    pub laplacian: String,
    pub kernel: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub eps: f64,
    pub replica: usize,
    pub metric: String,
    pub value: f64,
    pub wall_ms: f64,
    pub solver: String,
    pub residual: Option<f64>,
}

/// Mean and standard error of one metric in one `(N, ε)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    #[serde(rename = "N")]
    pub n: usize,
    pub eps: f64,
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

/// Per-metric aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: String,
    /// Cells ordered by `N`, then `ε`.
    pub cells: Vec<CellStats>,
    /// Best-`ε` cell per `N` (argmin of the mean; ties go to the smaller `ε`).
    pub best: Vec<CellStats>,
    /// Fit of log₁₀(best mean) against log₁₀ N, when at least two `N`.
    pub slope: Option<SlopeFit>,
}

/// Error-vs-`ε` curve at one `N`, with branch slopes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSummary {
    #[serde(rename = "N")]
    pub n: usize,
    pub eps: Vec<f64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Fit over the smallest third of the `ε` values.
    pub small_eps_slope: Option<SlopeFit>,
    /// Fit over the largest third of the `ε` values.
    pub large_eps_slope: Option<SlopeFit>,
}

/// Everything the JSON summary and the plots are made from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub name: String,
    pub experiment: String,
    pub manifold: String,
    pub density: String,
    pub laplacian: String,
    pub kernel: String,
    pub n_grid: Vec<usize>,
    /// Distinct bandwidths, ascending.
    pub eps_grid: Vec<f64>,
    pub metrics: Vec<MetricSummary>,
    pub curves: Vec<CurveSummary>,
    pub records: usize,
    pub failures: usize,
    pub cell_wall_ms_total: f64,
}

impl Aggregate {
    pub fn metric(&self, name: &str) -> Option<&MetricSummary> {
        self.metrics.iter().find(|m| m.metric == name)
    }
}

/// Records plus their aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub records: Vec<Record>,
    pub aggregate: Aggregate,
    /// Extra experiment-level values (e.g. the form-check target).
    pub extras: BTreeMap<String, f64>,
    pub elapsed_ms: f64,
}

/// One unit of parallel work.
#[derive(Debug, Clone, Copy)]
struct Cell {
    n_index: usize,
    eps_index: usize,
    replica: usize,
    n: usize,
    eps: f64,
}

/// Values shared by all cells of one run.
struct Context<'a> {
    config: &'a ExperimentConfig,
    test_function: TestFunction,
    form_target: f64,
}

/// Runs an eigenvalue/eigenvector sweep.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    expect_kind(config, ExperimentKind::EigenSweep)?;
    run_cells(config)
}

/// Runs a pointwise-error curve.
pub fn run_pointwise_curve(config: &ExperimentConfig) -> Result<SweepResult> {
    expect_kind(config, ExperimentKind::PointwiseCurve)?;
    run_cells(config)
}

/// Runs a Dirichlet-form convergence check.
pub fn run_form_check(config: &ExperimentConfig) -> Result<SweepResult> {
    expect_kind(config, ExperimentKind::FormCheck)?;
    run_cells(config)
}

fn expect_kind(config: &ExperimentConfig, kind: ExperimentKind) -> Result<()> {
    config.validate()?;
    if config.experiment != kind {
        return Err(LabError::Config(format!(
            "expected a `{}` configuration, got `{}`",
            kind.name(),
            config.experiment.name()
        )));
    }
    Ok(())
}

/// Bandwidth rule of the form check, `ε = c·N^{-1/(d/2+2)}`.
pub fn form_bandwidth(model: ManifoldModel, n: usize, scale: f64) -> f64 {
    let d = model.intrinsic_dim() as f64;
    scale * (n as f64).powf(-1.0 / (d / 2.0 + 2.0))
}

/// Limit value of the graph Dirichlet form for `f`: `⟨f, −Δf⟩` for the
/// density-corrected form, `∫|∇f|² p² dV` for the standard one.
pub fn form_target(
    model: ManifoldModel,
    density: crate::manifold::DensityModel,
    f: &TestFunction,
    variant: FormVariant,
) -> f64 {
    let integrate = |g: &dyn Fn(&[f64]) -> f64| -> f64 {
        match model {
            ManifoldModel::CircleR4 => circle_nodes(1_000_000).map(|(t, w)| w * g(&[t])).sum(),
            ManifoldModel::SphereR3 => sphere_nodes(400, 800).iter().map(|(x, w)| w * g(x)).sum(),
        }
    };
    match variant {
        FormVariant::DensityCorrected => integrate(&|x| -f.value(model, x) * f.laplacian(model, x)),
        FormVariant::Standard => {
            if density.is_uniform() {
                let p = 1.0 / model.volume();
                p * p * integrate(&|x| -f.value(model, x) * f.laplacian(model, x))
            } else {
                integrate(&|x| {
                    let df = f.circle_derivative(model, x).expect("non-uniform densities live on the circle");
                    let p = density.value(model, x);
                    df * df * p * p
                })
            }
        }
    }
}

fn form_variant(kind: LaplacianKind) -> FormVariant {
    match kind {
        LaplacianKind::DensityCorrected => FormVariant::DensityCorrected,
        _ => FormVariant::Standard,
    }
}

fn cells_of(config: &ExperimentConfig) -> Result<Vec<Cell>> {
    let ns = config.n_values()?;
    let eps = config.eps_values()?;
    let mut cells = Vec::new();
    for (n_index, &n) in ns.iter().enumerate() {
        let row: Vec<f64> = match &eps {
            Some(e) => e.clone(),
            None => vec![form_bandwidth(config.manifold, n, config.eps_scale)],
        };
        for (eps_index, &e) in row.iter().enumerate() {
            for replica in 0..config.replicas {
                cells.push(Cell { n_index, eps_index, replica, n, eps: e });
            }
        }
    }
    Ok(cells)
}

fn run_cells(config: &ExperimentConfig) -> Result<SweepResult> {
    let start = Instant::now();
    let cells = cells_of(config)?;
    let test_function = config.test_function_or_default();
    let mut extras = BTreeMap::new();
    let form_target = if config.experiment == ExperimentKind::FormCheck {
        let t = form_target(config.manifold, config.density, &test_function, form_variant(config.laplacian));
        extras.insert("form_target".to_string(), t);
        t
    } else {
        0.0
    };
    let ctx = Context { config, test_function, form_target };
    let workers = config.workers.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| LabError::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    let done = AtomicUsize::new(0);
    let total = cells.len();
    let step = (total / 10).max(1);
    let rows: Vec<Vec<Record>> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let rows = run_cell(&ctx, cell);
                let k = done.fetch_add(1, Ordering::Relaxed) + 1;
                if k.is_multiple_of(step) || k == total {
                    log::info!("{}: {k}/{total} cells", config.name);
                }
                rows
            })
            .collect()
    });
    let records: Vec<Record> = rows.into_iter().flatten().collect();
    let failures = records.iter().filter(|r| r.metric == FAILED_METRIC).count();
    if failures == total {
        return Err(LabError::AllCellsFailed(total));
    }
    let aggregate = aggregate(&config.name, &records)?;
    Ok(SweepResult { records, aggregate, extras, elapsed_ms: start.elapsed().as_secs_f64() * 1e3 })
}

fn run_cell(ctx: &Context, cell: &Cell) -> Vec<Record> {
    let config = ctx.config;
    let start = Instant::now();
    let outcome = cell_metrics(ctx, cell);
    let wall_ms =
        if config.output.record_timings { (start.elapsed().as_secs_f64() * 1e3).max(f64::MIN_POSITIVE) } else { 0.0 };
    let solver = match config.experiment {
        ExperimentKind::EigenSweep => config.backend.name(),
        _ => "none",
    };
    let base = Record {
        experiment: config.experiment.name().to_string(),
        manifold: config.manifold.name().to_string(),
        density: config.density.name().to_string(),
        laplacian: config.laplacian.name().to_string(),
        kernel: config.kernel.name().to_string(),
        n: cell.n,
        eps: cell.eps,
        replica: cell.replica,
        metric: String::new(),
        value: 0.0,
        wall_ms,
        solver: solver.to_string(),
        residual: None,
    };
    match outcome {
        Ok((metrics, residual)) => metrics
            .into_iter()
            .map(|(metric, value)| Record { metric: metric.to_string(), value, residual, ..base.clone() })
            .collect(),
        Err(e) => {
            log::warn!("{}: cell N={} eps={:e} replica={} failed: {e}", config.name, cell.n, cell.eps, cell.replica);
            vec![Record { metric: FAILED_METRIC.to_string(), value: f64::NAN, ..base }]
        }
    }
}

type CellOutput = (Vec<(&'static str, f64)>, Option<f64>);

fn cell_metrics(ctx: &Context, cell: &Cell) -> Result<CellOutput> {
    let config = ctx.config;
    let seed = cell_seed(config.base_seed, cell.replica, cell.n_index, cell.eps_index);
    let samples = sample(config.manifold, config.density, cell.n, seed)?;
    let mut spec = KernelSpec::new(config.kernel, cell.eps, config.manifold.intrinsic_dim())?;
    if let Some(t) = config.truncation {
        spec = spec.with_truncation(t);
    }
    let ops = build_affinity(&samples, &spec, config.laplacian)?;
    match config.experiment {
        ExperimentKind::EigenSweep => {
            let spectral = solve_lowest(&ops, config.k_max, config.backend)?;
            let system = analytic_spectrum(config.manifold, config.k_max + 1);
            let convention = match config.laplacian {
                LaplacianKind::DensityCorrected => ReferenceConvention::TildePhi,
                _ => ReferenceConvention::PhiScaled,
            };
            let refs = build_references(&samples, &system, config.k_max, convention)?;
            let report = align_and_score(&spectral, &refs, &system.eigenvalues, config.k_max, config.gap_rel_tol)?;
            if !report.alpha_flagged.is_empty() {
                log::debug!("alpha outside [0.5, 2] at indices {:?}", report.alpha_flagged);
            }
            let residual = spectral.meta.max_relative_residual(&spectral.eigenvalues);
            Ok((vec![("rel_err_lambda", report.rel_err_lambda), ("rel_err_v", report.rel_err_v)], Some(residual)))
        }
        ExperimentKind::PointwiseCurve => {
            let (f, lap) = restrict_pair(&samples, &ctx.test_function);
            Ok((vec![("rel_err_pt", pointwise_error(&ops, &f, &lap)?)], None))
        }
        ExperimentKind::FormCheck => {
            let (f, _) = restrict_pair(&samples, &ctx.test_function);
            let value = ops.dirichlet_form(&f, form_variant(config.laplacian))?;
            let abs = (value - ctx.form_target).abs();
            let rel = if ctx.form_target != 0.0 { abs / ctx.form_target.abs() } else { abs };
            Ok((vec![("form_value", value), ("form_abs_error", abs), ("form_rel_error", rel)], None))
        }
        other => Err(LabError::Config(format!("`{}` is not a sweep experiment", other.name()))),
    }
}

fn restrict_pair(samples: &SampleSet, f: &TestFunction) -> (Vec<f64>, Vec<f64>) {
    let model = samples.model();
    (samples.restrict(|x| f.value(model, x)), samples.restrict(|x| f.laplacian(model, x)))
}

/// Metrics for which best-`ε` selection and slope fits are meaningful.
fn is_error_metric(metric: &str) -> bool {
    metric != "form_value"
}

/// Aggregates records: per-cell means and standard errors, best `ε` per
/// `N`, slopes, and (for pointwise curves) branch slopes. A pure function
/// of the records, so plots regenerated from a CSV match the originals.
pub fn aggregate(name: &str, records: &[Record]) -> Result<Aggregate> {
    let first = records.first().ok_or_else(|| LabError::InvalidArgument("no records to aggregate".into()))?;
    let mut n_grid: Vec<usize> = records.iter().map(|r| r.n).collect();
    n_grid.sort_unstable();
    n_grid.dedup();
    let mut eps_grid: Vec<f64> = records.iter().map(|r| r.eps).collect();
    eps_grid.sort_by(f64::total_cmp);
    eps_grid.dedup();

    // metric → (N, ε bits) → values; BTreeMap keys give canonical order
    // (ε is positive, so its bit pattern orders like its value).
    let mut groups: BTreeMap<&str, BTreeMap<(usize, u64), Vec<f64>>> = BTreeMap::new();
    let mut failures = 0;
    let mut wall = 0.0;
    let mut seen_cells = std::collections::BTreeSet::new();
    for r in records {
        if seen_cells.insert((r.n, r.eps.to_bits(), r.replica)) {
            wall += r.wall_ms;
        }
        if r.metric == FAILED_METRIC {
            failures += 1;
            continue;
        }
        groups.entry(r.metric.as_str()).or_default().entry((r.n, r.eps.to_bits())).or_default().push(r.value);
    }
    let mut metrics = Vec::new();
    for (metric, cells) in &groups {
        let cells: Vec<CellStats> = cells
            .iter()
            .map(|(&(n, bits), values)| {
                let (mean, stderr) = mean_stderr(values);
                CellStats { n, eps: f64::from_bits(bits), mean, stderr, count: values.len() }
            })
            .collect();
        let (best, slope) = if is_error_metric(metric) {
            let best: Vec<CellStats> = n_grid
                .iter()
                .filter_map(|&n| {
                    cells
                        .iter()
                        .filter(|c| c.n == n && c.mean.is_finite())
                        .fold(None::<&CellStats>, |acc, c| match acc {
                            Some(b) if b.mean <= c.mean => Some(b),
                            _ => Some(c),
                        })
                        .cloned()
                })
                .collect();
            let slope = if best.len() >= 2 && best.iter().all(|b| b.mean > 0.0) {
                let xs: Vec<f64> = best.iter().map(|b| b.n as f64).collect();
                let ys: Vec<f64> = best.iter().map(|b| b.mean).collect();
                fit_loglog_slope(&xs, &ys).ok()
            } else {
                None
            };
            (best, slope)
        } else {
            (Vec::new(), None)
        };
        metrics.push(MetricSummary { metric: metric.to_string(), cells, best, slope });
    }
    let curves = if first.experiment == ExperimentKind::PointwiseCurve.name() {
        metrics
            .iter()
            .find(|m| m.metric == "rel_err_pt")
            .map(|m| {
                n_grid
                    .iter()
                    .map(|&n| {
                        let row: Vec<&CellStats> = m.cells.iter().filter(|c| c.n == n).collect();
                        curve(n, &row)
                    })
                    .collect()
            })
            .unwrap_or_default()
    } else {
        Vec::new()
    };
    Ok(Aggregate {
        name: name.to_string(),
        experiment: first.experiment.clone(),
        manifold: first.manifold.clone(),
        density: first.density.clone(),
        laplacian: first.laplacian.clone(),
        kernel: first.kernel.clone(),
        n_grid,
        eps_grid,
        metrics,
        curves,
        records: records.len(),
        failures,
        cell_wall_ms_total: wall,
    })
}

fn curve(n: usize, row: &[&CellStats]) -> CurveSummary {
    let eps: Vec<f64> = row.iter().map(|c| c.eps).collect();
    let mean: Vec<f64> = row.iter().map(|c| c.mean).collect();
    let stderr: Vec<f64> = row.iter().map(|c| c.stderr).collect();
    let third = eps.len() / 3;
    let fit = |range: std::ops::Range<usize>| {
        if third >= 2 {
            fit_loglog_slope(&eps[range.clone()], &mean[range]).ok()
        } else {
            None
        }
    };
    CurveSummary {
        n,
        small_eps_slope: fit(0..third),
        large_eps_slope: fit(eps.len() - third..eps.len()),
        eps,
        mean,
        stderr,
    }
}

/// Sample mean and standard error of the mean (0 for a single value).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::Grid;
    use crate::manifold::DensityModel;

    fn tiny_sweep() -> ExperimentConfig {
        let mut c = ExperimentConfig::new("tiny", ExperimentKind::EigenSweep, ManifoldModel::CircleR4);
        c.n_grid = Some(Grid::List(vec![150.0, 250.0]));
        c.eps_grid = Some(Grid::log(1e-3, 4e-3, 3));
        c.replicas = 2;
        c.workers = Some(2);
        c.output.record_timings = false;
        c
    }

    #[test]
    fn record_count_and_best_selection() {
        let r = run_sweep(&tiny_sweep()).unwrap();
        assert_eq!(r.records.len(), 2 * 3 * 2 * 2);
        let m = r.aggregate.metric("rel_err_lambda").unwrap();
        assert_eq!(m.cells.len(), 6);
        for b in &m.best {
            let row_min = m.cells.iter().filter(|c| c.n == b.n).map(|c| c.mean).fold(f64::INFINITY, f64::min);
            assert_eq!(b.mean, row_min);
        }
        assert!(m.slope.is_some());
        assert!(r.records.iter().all(|rec| rec.residual.unwrap() < 1e-8));
    }

    #[test]
    fn deterministic_across_worker_counts() {
        let a = run_sweep(&tiny_sweep()).unwrap();
        let mut c = tiny_sweep();
        c.workers = Some(1);
        let b = run_sweep(&c).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.aggregate, b.aggregate);
    }

    #[test]
    fn single_cell_aggregate_equals_record() {
        let mut c = tiny_sweep();
        c.n_grid = Some(Grid::List(vec![200.0]));
        c.eps_grid = Some(Grid::List(vec![2e-3]));
        c.replicas = 1;
        let r = run_sweep(&c).unwrap();
        let m = r.aggregate.metric("rel_err_v").unwrap();
        let rec = r.records.iter().find(|x| x.metric == "rel_err_v").unwrap();
        assert_eq!(m.cells[0].mean, rec.value);
        assert_eq!(m.cells[0].stderr, 0.0);
        assert!(m.slope.is_none());
    }

    #[test]
    fn failures_are_isolated() {
        // The indicator kernel disconnects the graph at the smallest ε only.
        let mut c = tiny_sweep();
        c.kernel = crate::graph::KernelProfile::Indicator;
        c.n_grid = Some(Grid::List(vec![100.0]));
        c.eps_grid = Some(Grid::List(vec![1e-7, 1e-2]));
        let r = run_sweep(&c).unwrap();
        let failed: Vec<&Record> = r.records.iter().filter(|x| x.metric == FAILED_METRIC).collect();
        assert_eq!(failed.len(), 2);
        assert!(failed.iter().all(|x| x.eps == 1e-7 && x.value.is_nan()));
        assert_eq!(r.aggregate.failures, 2);
        let m = r.aggregate.metric("rel_err_lambda").unwrap();
        assert_eq!(m.cells.len(), 1);
        assert!(m.cells[0].mean.is_finite());

        c.eps_grid = Some(Grid::List(vec![1e-8, 1e-7]));
        assert!(matches!(run_sweep(&c), Err(LabError::AllCellsFailed(4))));
    }

    #[test]
    fn form_targets() {
        let f = TestFunction::Eigenfunction { index: 1, scale: 1.0 };
        let t = form_target(ManifoldModel::CircleR4, DensityModel::Uniform, &f, FormVariant::Standard);
        assert!((t - 4.0 * std::f64::consts::PI.powi(2)).abs() < 1e-8);
        let t = form_target(
            ManifoldModel::CircleR4,
            DensityModel::CircleNonUniform,
            &TestFunction::CircleTwoMode,
            FormVariant::DensityCorrected,
        );
        let pi = std::f64::consts::PI;
        let exact = 0.5 * (0.04 * (4.0 * pi).powi(2) + 0.64 * (8.0 * pi).powi(2));
        assert!((t / exact - 1.0).abs() < 1e-10);
        let f = TestFunction::Eigenfunction { index: 2, scale: (4.0 * pi).sqrt() };
        let t = form_target(ManifoldModel::SphereR3, DensityModel::Uniform, &f, FormVariant::Standard);
        assert!((t - 2.0 / (4.0 * pi) * 4.0 * pi / (4.0 * pi)).abs() < 1e-8);
    }

    #[test]
    fn pointwise_and_form_runs() {
        let mut c = ExperimentConfig::new("pt", ExperimentKind::PointwiseCurve, ManifoldModel::CircleR4);
        c.density = DensityModel::CircleNonUniform;
        c.laplacian = LaplacianKind::DensityCorrected;
        c.n_grid = Some(Grid::List(vec![300.0]));
        c.eps_grid = Some(Grid::log(1e-4, 1e-2, 6));
        c.replicas = 2;
        let r = run_pointwise_curve(&c).unwrap();
        assert_eq!(r.aggregate.curves.len(), 1);
        assert!(r.aggregate.curves[0].small_eps_slope.is_some());

        let mut c = ExperimentConfig::new("form", ExperimentKind::FormCheck, ManifoldModel::CircleR4);
        c.n_grid = Some(Grid::List(vec![200.0, 400.0]));
        c.replicas = 2;
        let r = run_form_check(&c).unwrap();
        let cells = &r.aggregate.metric("form_rel_error").unwrap().cells;
        assert_eq!(cells.len(), 2);
        assert!((cells[0].eps - 200f64.powf(-0.4)).abs() < 1e-15);
        assert!(run_sweep(&c).is_err());
    }

    #[test]
    fn mean_and_stderr() {
        let (m, s) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }
}
