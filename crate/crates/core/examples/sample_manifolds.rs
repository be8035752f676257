//! Draws samples from the circle in R⁴ (uniform and non-uniform) and the
//! sphere in R³, and prints the analytic Laplace–Beltrami spectra.
//!
//! Run with `cargo run --example sample_manifolds`.

use laplab::manifold::{analytic_spectrum, sample, DensityModel, ManifoldModel};

fn main() -> laplab::Result<()> {
    for (model, density) in [
        (ManifoldModel::CircleR4, DensityModel::Uniform),
        (ManifoldModel::CircleR4, DensityModel::CircleNonUniform),
        (ManifoldModel::SphereR3, DensityModel::Uniform),
    ] {
        let s = sample(model, density, 5, 42)?;
        println!("{} / {}:", model.name(), density.name());
        for i in 0..s.len() {
            println!("  x = {:?}  ->  {:.4?}  p = {:.4}", s.intrinsic(i), s.point(i), s.density_values()[i]);
        }
    }
    for model in [ManifoldModel::CircleR4, ManifoldModel::SphereR3] {
        let sys = analytic_spectrum(model, 10);
        println!("{} eigenvalues: {:.3?}", model.name(), sys.eigenvalues);
        println!("{} multiplicities: {:?}", model.name(), sys.multiplicities);
    }
    Ok(())
}
