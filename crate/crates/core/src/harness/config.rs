//! Experiment configuration, read from TOML with unknown keys rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::eigen::Backend;
use crate::error::{LabError, Result};
use crate::graph::{KernelProfile, LaplacianKind};
use crate::manifold::{DensityModel, ManifoldModel, TestFunction};

/// Which experiment a configuration describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    EigenSweep,
    PointwiseCurve,
    FormCheck,
    HeatKernelCheck,
    DegreeCheck,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::EigenSweep => "eigen_sweep",
            ExperimentKind::PointwiseCurve => "pointwise_curve",
            ExperimentKind::FormCheck => "form_check",
            ExperimentKind::HeatKernelCheck => "heat_kernel_check",
            ExperimentKind::DegreeCheck => "degree_check",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [
            ExperimentKind::EigenSweep,
            ExperimentKind::PointwiseCurve,
            ExperimentKind::FormCheck,
            ExperimentKind::HeatKernelCheck,
            ExperimentKind::DegreeCheck,
        ]
        .into_iter()
        .find(|k| k.name() == name)
    }
}

/// A grid given either explicitly or as `count` log-spaced points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Log { min: f64, max: f64, count: usize },
}

impl Grid {
    /// `count` points evenly spaced in log₁₀ between `min` and `max`.
    pub fn log(min: f64, max: f64, count: usize) -> Self {
        Grid::Log { min, max, count }
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::List(v) => v.clone(),
            Grid::Log { min, max, count } => {
                if *count == 1 {
                    return vec![*min];
                }
                let (a, b) = (min.log10(), max.log10());
                (0..*count).map(|i| 10f64.powf(a + (b - a) * i as f64 / (*count - 1) as f64)).collect()
            }
        }
    }
}

/// Output settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Output directory; the `--out-dir` flag overrides it, and
    /// `LAPLAB_OUT_DIR` is used when neither is given.
    #[serde(default)]
    pub dir: Option<PathBuf>,
    /// Record per-cell wall-clock times. Disable for byte-identical CSVs.
    #[serde(default = "default_true")]
    pub record_timings: bool,
    /// Write SVG plots next to the CSV and JSON.
    #[serde(default = "default_true")]
    pub plots: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: None, record_timings: true, plots: true }
    }
}

fn default_true() -> bool {
    true
}
fn default_eps_scale() -> f64 {
    1.0
}
fn default_k_max() -> usize {
    9
}
fn default_replicas() -> usize {
    30
}
fn default_gap() -> f64 {
    0.05
}
fn default_density() -> DensityModel {
    DensityModel::Uniform
}
fn default_laplacian() -> LaplacianKind {
    LaplacianKind::RandomWalk
}
fn default_kernel() -> KernelProfile {
    KernelProfile::Gaussian
}
fn default_tolerance() -> f64 {
    0.1
}

/// One experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Base name of the output files.
    pub name: String,
    pub experiment: ExperimentKind,
    pub manifold: ManifoldModel,
    #[serde(default = "default_density")]
    pub density: DensityModel,
    #[serde(default = "default_laplacian")]
    pub laplacian: LaplacianKind,
    #[serde(default = "default_kernel")]
    pub kernel: KernelProfile,
    /// Relative truncation threshold for kernel entries (opt-in).
    #[serde(default)]
    pub truncation: Option<f64>,
    /// Sample sizes.
    #[serde(default)]
    pub n_grid: Option<Grid>,
    /// Bandwidths. Form checks may omit it and use `ε = N^{-1/(d/2+2)}`.
    #[serde(default)]
    pub eps_grid: Option<Grid>,
    /// Constant `c` of the form-check bandwidth rule `ε = c·N^{-1/(d/2+2)}`,
    /// used when `eps_grid` is absent.
    #[serde(default = "default_eps_scale")]
    pub eps_scale: f64,
    /// Number of eigenpairs scored, including the constant one.
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub backend: Backend,
    /// Relative gap below which analytic eigenvalues form one block.
    #[serde(default = "default_gap")]
    pub gap_rel_tol: f64,
    /// Test function for pointwise and form experiments.
    #[serde(default)]
    pub test_function: Option<TestFunction>,
    /// Pass threshold of the degree-concentration diagnostic.
    #[serde(default = "default_tolerance")]
    pub degree_tolerance: f64,
    /// Worker threads; defaults to the available parallelism.
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    /// A configuration with defaults for everything but the essentials.
    pub fn new(name: &str, experiment: ExperimentKind, manifold: ManifoldModel) -> Self {
        ExperimentConfig {
            name: name.to_string(),
            experiment,
            manifold,
            density: default_density(),
            laplacian: default_laplacian(),
            kernel: default_kernel(),
            truncation: None,
            n_grid: None,
            eps_grid: None,
            eps_scale: default_eps_scale(),
            k_max: default_k_max(),
            replicas: default_replicas(),
            base_seed: 0,
            backend: Backend::default(),
            gap_rel_tol: default_gap(),
            test_function: None,
            degree_tolerance: default_tolerance(),
            workers: None,
            output: OutputConfig::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            LabError::Config(msg) => LabError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Sample sizes, ascending.
    pub fn n_values(&self) -> Result<Vec<usize>> {
        let grid =
            self.n_grid.as_ref().ok_or_else(|| LabError::Config("`n_grid` is required for this experiment".into()))?;
        let values: Vec<usize> = grid.values().iter().map(|v| v.round() as usize).collect();
        check_grid("n_grid", &values.iter().map(|&v| v as f64).collect::<Vec<_>>())?;
        if values[0] < 2 {
            return Err(LabError::Config("`n_grid` values must be at least 2".into()));
        }
        let mut values = values;
        values.sort_unstable();
        Ok(values)
    }

    /// Bandwidths, ascending, if a grid is configured.
    pub fn eps_values(&self) -> Result<Option<Vec<f64>>> {
        match &self.eps_grid {
            None => Ok(None),
            Some(grid) => {
                let mut values = grid.values();
                check_grid("eps_grid", &values)?;
                values.sort_by(f64::total_cmp);
                Ok(Some(values))
            }
        }
    }

    /// The test function, defaulting per experiment.
    pub fn test_function_or_default(&self) -> TestFunction {
        self.test_function.unwrap_or(match (self.experiment, self.density.is_uniform()) {
            (ExperimentKind::FormCheck, true) => {
                TestFunction::Eigenfunction { index: 1, scale: self.manifold.volume().sqrt() }
            }
            _ => TestFunction::CircleTwoMode,
        })
    }

    /// Checks cross-field consistency.
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(LabError::Config("`name` must be a non-empty file stem".into()));
        }
        self.density.check_compatible(self.manifold)?;
        if self.replicas == 0 {
            return Err(LabError::Config("`replicas` must be at least 1".into()));
        }
        if !(self.eps_scale > 0.0 && self.eps_scale.is_finite()) {
            return Err(LabError::Config("`eps_scale` must be positive".into()));
        }
        if self.workers == Some(0) {
            return Err(LabError::Config("`workers` must be at least 1".into()));
        }
        if !(self.gap_rel_tol >= 0.0 && self.gap_rel_tol < 1.0) {
            return Err(LabError::Config("`gap_rel_tol` must lie in [0, 1)".into()));
        }
        if let Some(t) = self.truncation {
            if !(t > 0.0 && t < 1.0) {
                return Err(LabError::Config("`truncation` must lie in (0, 1)".into()));
            }
        }
        if self.laplacian == LaplacianKind::Unnormalized && !self.density.is_uniform() {
            return Err(LabError::NonUniformUnnormalized);
        }
        match self.experiment {
            ExperimentKind::EigenSweep => {
                self.n_values()?;
                if self.eps_values()?.is_none() {
                    return Err(LabError::Config("`eps_grid` is required for eigen sweeps".into()));
                }
                if self.k_max < 2 {
                    return Err(LabError::Config("`k_max` must be at least 2".into()));
                }
                let mu = crate::manifold::analytic_spectrum(self.manifold, self.k_max + 1).eigenvalues;
                let blocks = crate::analysis::multiplicity_blocks(&mu, self.gap_rel_tol);
                if let Some(b) = blocks.iter().find(|b| b.contains(&(self.k_max - 1)) && b.contains(&self.k_max)) {
                    return Err(LabError::BlockStraddle {
                        block_start: b.start + 1,
                        block_end: b.end,
                        k_max: self.k_max,
                        suggested: b.end,
                    });
                }
                let min_n = self.n_values()?[0];
                if self.k_max + 1 > min_n {
                    return Err(LabError::Config("`k_max` + 1 exceeds the smallest N".into()));
                }
            }
            ExperimentKind::PointwiseCurve | ExperimentKind::FormCheck => {
                self.n_values()?;
                let needs_eps = self.experiment == ExperimentKind::PointwiseCurve;
                if needs_eps && self.eps_values()?.is_none() {
                    return Err(LabError::Config("`eps_grid` is required for pointwise curves".into()));
                }
                self.eps_values()?;
                let f = self.test_function_or_default();
                f.check_compatible(self.manifold)?;
                if self.experiment == ExperimentKind::PointwiseCurve
                    && !self.density.is_uniform()
                    && self.laplacian != LaplacianKind::DensityCorrected
                {
                    return Err(LabError::Config(
                        "pointwise errors against Δf need a uniform density or the `dc` Laplacian".into(),
                    ));
                }
            }
            ExperimentKind::HeatKernelCheck => {}
            ExperimentKind::DegreeCheck => {
                self.n_values()?;
                if self.eps_values()?.is_none() {
                    return Err(LabError::Config("`eps_grid` is required for degree checks".into()));
                }
            }
        }
        Ok(())
    }
}

fn check_grid(name: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(LabError::Config(format!("`{name}` is empty")));
    }
    if values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(LabError::Config(format!("`{name}` values must be positive")));
    }
    let increasing = values.windows(2).all(|w| w[0] < w[1]);
    let decreasing = values.windows(2).all(|w| w[0] > w[1]);
    if !(increasing || decreasing) {
        return Err(LabError::Config(format!("`{name}` must be strictly monotone")));
    }
    Ok(())
}
