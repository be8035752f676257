//! Experiment harness: configuration, replica sweeps, validation suites
//! and artifact output.

pub mod config;
pub mod output;
pub mod svg;
pub mod sweep;
pub mod validation;

pub use config::{ExperimentConfig, ExperimentKind, Grid, OutputConfig};
pub use output::{
    plot_from_csv, read_records_csv, write_artifacts, write_records_csv, write_validation, Artifacts, CSV_HEADER,
};
pub use sweep::{aggregate, run_form_check, run_pointwise_curve, run_sweep, Aggregate, Record, SweepResult};
pub use validation::{run_validation_suite, CheckResult, ValidationReport};

use crate::error::Result;

/// Result of [`run`].
#[derive(Debug, Clone)]
pub enum RunOutcome {
    Sweep(SweepResult),
    Validation(ValidationReport),
}

/// Runs whatever experiment `config` describes.
pub fn run(config: &ExperimentConfig) -> Result<RunOutcome> {
    Ok(match config.experiment {
        ExperimentKind::EigenSweep => RunOutcome::Sweep(run_sweep(config)?),
        ExperimentKind::PointwiseCurve => RunOutcome::Sweep(run_pointwise_curve(config)?),
        ExperimentKind::FormCheck => RunOutcome::Sweep(run_form_check(config)?),
        ExperimentKind::HeatKernelCheck | ExperimentKind::DegreeCheck => {
            RunOutcome::Validation(run_validation_suite(config)?)
        }
    })
}
