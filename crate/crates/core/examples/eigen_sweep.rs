//! A small eigen-error sweep over an (N, ε) grid with replicas, written
//! as CSV, JSON and SVG to a temporary directory.
//!
//! Run with `cargo run --release --example eigen_sweep`.

use laplab::harness::{run_sweep, write_artifacts, ExperimentConfig, ExperimentKind, Grid};
use laplab::manifold::ManifoldModel;

fn main() -> laplab::Result<()> {
    let mut config = ExperimentConfig::new("example_sweep", ExperimentKind::EigenSweep, ManifoldModel::CircleR4);
    config.n_grid = Some(Grid::log(400.0, 1200.0, 3));
    config.eps_grid = Some(Grid::log(1e-4, 1e-3, 4));
    config.replicas = 4;
    let result = run_sweep(&config)?;
    for metric in ["rel_err_lambda", "rel_err_v"] {
        let m = result.aggregate.metric(metric).expect("eigen sweeps record both errors");
        for b in &m.best {
            println!("{metric}: N = {:>5}, best eps = {:.2e}, mean = {:.4} ± {:.4}", b.n, b.eps, b.mean, b.stderr);
        }
        if let Some(fit) = &m.slope {
            println!("{metric}: slope {:.3}, r² {:.3}", fit.slope, fit.r2);
        }
    }
    let dir = std::env::temp_dir().join("laplab_example_sweep");
    let artifacts = write_artifacts(&dir, &result, true)?;
    println!("wrote {:?}, {}, {:?}", artifacts.csv, artifacts.json.display(), artifacts.svgs);
    Ok(())
}
