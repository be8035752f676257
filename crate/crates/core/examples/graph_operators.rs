//! Builds the affinity matrix and the three graph Laplacians for one
//! sample, evaluates Dirichlet forms, and writes the Laplacian in the
//! binary dump format.
//!
//! Run with `cargo run --example graph_operators`.

use laplab::graph::{build_affinity, read_matrix, write_matrix, FormVariant, KernelSpec, LaplacianKind};
use laplab::manifold::{sample, DensityModel, ManifoldModel, TestFunction};

fn main() -> laplab::Result<()> {
    let model = ManifoldModel::CircleR4;
    let spec = KernelSpec::gaussian(3e-4, model.intrinsic_dim())?;
    let f = TestFunction::CircleTwoMode;

    let uniform = sample(model, DensityModel::Uniform, 800, 7)?;
    let skewed = sample(model, DensityModel::CircleNonUniform, 800, 7)?;
    for (kind, samples) in [
        (LaplacianKind::Unnormalized, &uniform),
        (LaplacianKind::RandomWalk, &uniform),
        (LaplacianKind::DensityCorrected, &skewed),
    ] {
        let ops = build_affinity(samples, &spec, kind)?;
        let u = samples.restrict(|x| f.value(model, x));
        let variant = match kind {
            LaplacianKind::DensityCorrected => FormVariant::DensityCorrected,
            _ => FormVariant::Standard,
        };
        let lu = ops.apply(&u)?;
        println!(
            "{}: form = {:.3}, (L u)_0 = {:.3}, row-stochastic error = {:.1e}",
            kind.name(),
            ops.dirichlet_form(&u, variant)?,
            lu[0],
            ops.row_stochastic_error()
        );
    }

    let ops = build_affinity(&uniform, &spec, LaplacianKind::RandomWalk)?;
    let path = std::env::temp_dir().join("laplab_rw.bin");
    let l = ops.laplacian_matrix()?;
    write_matrix(&path, &l)?;
    let back = read_matrix(&path)?;
    println!("wrote {} ({}x{}), round trip exact: {}", path.display(), back.nrows(), back.ncols(), back == l);
    Ok(())
}
