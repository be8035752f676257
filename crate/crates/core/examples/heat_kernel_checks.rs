//! Runs the heat-kernel diagnostic suites on the circle and the sphere
//! and prints every check with its measured value.
//!
//! Run with `cargo run --release --example heat_kernel_checks`.

use laplab::harness::{run_validation_suite, ExperimentConfig, ExperimentKind};
use laplab::manifold::ManifoldModel;

fn main() -> laplab::Result<()> {
    for model in [ManifoldModel::CircleR4, ManifoldModel::SphereR3] {
        let config = ExperimentConfig::new(&format!("heat_{}", model.name()), ExperimentKind::HeatKernelCheck, model);
        let report = run_validation_suite(&config)?;
        for (tag, checks) in [("", &report.checks), (" [supplementary]", &report.supplementary)] {
            for c in checks {
                let status = if c.passed { "PASS" } else { "FAIL" };
                println!("{status} {}{tag}: {:.3e} (threshold {:.1e})  {}", c.name, c.measured, c.threshold, c.detail);
            }
        }
    }
    Ok(())
}
