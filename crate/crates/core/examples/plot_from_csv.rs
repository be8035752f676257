//! Regenerates the SVG plots of a sweep from its CSV alone and checks
//! that they are byte-identical to the ones written with the sweep.
//!
//! Run with `cargo run --release --example plot_from_csv`.

use laplab::harness::{output::plot_from_csv, run_sweep, write_artifacts, ExperimentConfig, ExperimentKind, Grid};
use laplab::manifold::ManifoldModel;

fn main() -> laplab::Result<()> {
    let mut config = ExperimentConfig::new("replot", ExperimentKind::EigenSweep, ManifoldModel::SphereR3);
    config.n_grid = Some(Grid::List(vec![300.0, 600.0]));
    config.eps_grid = Some(Grid::log(0.05, 0.2, 3));
    config.replicas = 2;
    let result = run_sweep(&config)?;
    let first = std::env::temp_dir().join("laplab_replot_a");
    let second = std::env::temp_dir().join("laplab_replot_b");
    let artifacts = write_artifacts(&first, &result, true)?;
    let (_, regenerated) = plot_from_csv(artifacts.csv.as_ref().expect("sweeps write a CSV"), &second)?;
    for (a, b) in artifacts.svgs.iter().zip(&regenerated) {
        let same = std::fs::read(a).ok() == std::fs::read(b).ok();
        println!("{} vs {}: identical = {same}", a.display(), b.display());
    }
    Ok(())
}
