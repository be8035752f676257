//! Library-level pipeline tests: determinism across worker counts, and
//! aggregates that can be rebuilt from the written CSV alone.

use laplab::graph::LaplacianKind;
use laplab::harness::{
    aggregate, read_records_csv, run, write_artifacts, ExperimentConfig, ExperimentKind, Grid, RunOutcome,
};
use laplab::manifold::{DensityModel, ManifoldModel};

fn pointwise() -> ExperimentConfig {
    let mut c = ExperimentConfig::new("pw", ExperimentKind::PointwiseCurve, ManifoldModel::CircleR4);
    c.density = DensityModel::CircleNonUniform;
    c.laplacian = LaplacianKind::DensityCorrected;
    c.n_grid = Some(Grid::List(vec![400.0]));
    c.eps_grid = Some(Grid::log(1e-4, 1e-2, 6));
    c.replicas = 3;
    c.output.record_timings = false;
    c
}

fn sweep(c: &ExperimentConfig) -> laplab::harness::SweepResult {
    match run(c).unwrap() {
        RunOutcome::Sweep(r) => r,
        RunOutcome::Validation(_) => unreachable!(),
    }
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let mut c = pointwise();
    c.workers = Some(1);
    let a = sweep(&c);
    c.workers = Some(3);
    let b = sweep(&c);
    assert_eq!(a.records, b.records);
    assert_eq!(a.aggregate, b.aggregate);
}

#[test]
fn aggregate_is_rebuilt_from_csv() {
    let r = sweep(&pointwise());
    let dir = tempfile::tempdir().unwrap();
    let artifacts = write_artifacts(dir.path(), &r, false).unwrap();
    assert!(artifacts.svgs.is_empty());
    let records = read_records_csv(artifacts.csv.unwrap()).unwrap();
    assert_eq!(records, r.records);
    assert_eq!(aggregate("pw", &records).unwrap(), r.aggregate);
    // Six ε values give thirds of two points, so both branches are fitted.
    let curve = &r.aggregate.curves[0];
    assert!(curve.small_eps_slope.is_some() && curve.large_eps_slope.is_some());
}

#[test]
fn form_check_reports_target_and_bandwidth_rule() {
    let mut c = ExperimentConfig::new("form", ExperimentKind::FormCheck, ManifoldModel::CircleR4);
    c.laplacian = LaplacianKind::Unnormalized;
    c.n_grid = Some(Grid::List(vec![300.0, 600.0]));
    c.replicas = 2;
    let r = sweep(&c);
    assert!((r.extras["form_target"] - 4.0 * std::f64::consts::PI.powi(2)).abs() < 1e-6);
    let eps: Vec<f64> = r.aggregate.eps_grid.clone();
    let expected: Vec<f64> = [600.0f64, 300.0].iter().map(|n| n.powf(-0.4)).collect();
    for (a, b) in eps.iter().zip(&expected) {
        assert!((a - b).abs() < 1e-12);
    }
}
