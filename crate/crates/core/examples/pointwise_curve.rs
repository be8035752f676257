//! Pointwise error of the density-corrected Laplacian against ε on the
//! non-uniform circle, with the variance and bias branch slopes.
//!
//! Run with `cargo run --release --example pointwise_curve`.

use laplab::graph::LaplacianKind;
use laplab::harness::{run_pointwise_curve, ExperimentConfig, ExperimentKind, Grid};
use laplab::manifold::{DensityModel, ManifoldModel};

fn main() -> laplab::Result<()> {
    let mut config =
        ExperimentConfig::new("example_pointwise", ExperimentKind::PointwiseCurve, ManifoldModel::CircleR4);
    config.density = DensityModel::CircleNonUniform;
    config.laplacian = LaplacianKind::DensityCorrected;
    config.n_grid = Some(Grid::List(vec![2000.0]));
    config.eps_grid = Some(Grid::log(10f64.powf(-4.9), 10f64.powf(-2.4), 12));
    config.replicas = 8;
    let result = run_pointwise_curve(&config)?;
    let curve = &result.aggregate.curves[0];
    for (e, m) in curve.eps.iter().zip(&curve.mean) {
        println!("eps = {e:.3e}  RelErr_pt = {m:.4}");
    }
    if let (Some(small), Some(large)) = (&curve.small_eps_slope, &curve.large_eps_slope) {
        println!("small-eps slope {:.3}, large-eps slope {:.3}", small.slope, large.slope);
    }
    Ok(())
}
