//! Lowest eigenpairs of a random-walk graph Laplacian with the dense and
//! the iterative (Lanczos) backends, compared with the analytic spectrum.
//!
//! Run with `cargo run --release --example eigensolvers`.

use laplab::eigen::{rayleigh_quotient, solve_lowest, Backend};
use laplab::graph::{build_affinity, KernelSpec, LaplacianKind};
use laplab::manifold::{analytic_spectrum, sample, DensityModel, ManifoldModel};

#[allow(clippy::needless_range_loop)]
fn main() -> laplab::Result<()> {
    let model = ManifoldModel::SphereR3;
    let samples = sample(model, DensityModel::Uniform, 1000, 3)?;
    let spec = KernelSpec::gaussian(0.05, model.intrinsic_dim())?;
    let ops = build_affinity(&samples, &spec, LaplacianKind::RandomWalk)?;
    let k_max = 9;
    let dense = solve_lowest(&ops, k_max, Backend::Dense)?;
    let lanczos = solve_lowest(&ops, k_max, Backend::Iterative)?;
    let mu = analytic_spectrum(model, k_max + 1).eigenvalues;
    println!("{:>3} {:>9} {:>12} {:>12} {:>12}", "k", "mu", "dense", "iterative", "rayleigh");
    for k in 0..=k_max {
        let v: Vec<f64> = lanczos.eigenvectors.column(k).iter().copied().collect();
        println!(
            "{:>3} {:>9.3} {:>12.6} {:>12.6} {:>12.6}",
            k + 1,
            mu[k],
            dense.eigenvalues[k],
            lanczos.eigenvalues[k],
            rayleigh_quotient(&ops, &v)?
        );
    }
    println!(
        "Lanczos: {} iterations, {} mat-vecs, max relative residual {:.1e}",
        lanczos.meta.iterations,
        lanczos.meta.matvecs,
        lanczos.meta.max_relative_residual(&lanczos.eigenvalues)
    );
    Ok(())
}
