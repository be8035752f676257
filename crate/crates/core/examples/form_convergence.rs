//! Convergence of the graph Dirichlet forms to their continuum limits at
//! the bandwidth rule ε = N^(-1/(d/2+2)).
//!
//! Run with `cargo run --release --example form_convergence`.

use laplab::graph::LaplacianKind;
use laplab::harness::{run_form_check, ExperimentConfig, ExperimentKind, Grid};
use laplab::manifold::{DensityModel, ManifoldModel};

fn main() -> laplab::Result<()> {
    for (density, kind) in [
        (DensityModel::Uniform, LaplacianKind::Unnormalized),
        (DensityModel::CircleNonUniform, LaplacianKind::DensityCorrected),
    ] {
        let mut config = ExperimentConfig::new("example_form", ExperimentKind::FormCheck, ManifoldModel::CircleR4);
        config.density = density;
        config.laplacian = kind;
        config.n_grid = Some(Grid::List(vec![500.0, 1000.0, 2000.0]));
        config.replicas = 5;
        let result = run_form_check(&config)?;
        println!("{} / {}: target {:.4}", density.name(), kind.name(), result.extras["form_target"]);
        for c in &result.aggregate.metric("form_rel_error").expect("form metric").cells {
            println!("  N = {:>5}, eps = {:.4}, relative error = {:.4} ± {:.4}", c.n, c.eps, c.mean, c.stderr);
        }
    }
    Ok(())
}
