//! Degree concentration, row-stochasticity, PSD and heat quadratic-form
//! checks for a uniform and a non-uniform circle sample.
//!
//! Run with `cargo run --release --example degree_diagnostics`.

use laplab::graph::LaplacianKind;
use laplab::harness::{run_validation_suite, ExperimentConfig, ExperimentKind, Grid};
use laplab::manifold::{DensityModel, ManifoldModel};

fn main() -> laplab::Result<()> {
    for (density, kind) in [
        (DensityModel::Uniform, LaplacianKind::RandomWalk),
        (DensityModel::CircleNonUniform, LaplacianKind::DensityCorrected),
    ] {
        let mut config = ExperimentConfig::new("degrees", ExperimentKind::DegreeCheck, ManifoldModel::CircleR4);
        config.density = density;
        config.laplacian = kind;
        config.n_grid = Some(Grid::List(vec![2000.0]));
        config.eps_grid = Some(Grid::List(vec![3e-4]));
        config.degree_tolerance = 0.35;
        let report = run_validation_suite(&config)?;
        println!("{} / {}: all passed = {}", density.name(), kind.name(), report.all_passed());
        for c in report.checks.iter().chain(&report.supplementary) {
            println!(
                "  {:<40} {:>12.4e}  <= / >= {:.1e}  {}",
                c.name,
                c.measured,
                c.threshold,
                if c.passed { "ok" } else { "FAIL" }
            );
        }
    }
    Ok(())
}
