//! Command-line front end: argument parsing, configuration overrides,
//! dispatch and artifact output. The `laplab` binary only calls [`main`].

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::value::{Error as DeError, StrDeserializer};
use serde::de::IntoDeserializer;
use serde::Deserialize;

use crate::eigen::{solve_lowest, Backend};
use crate::error::{LabError, Result};
use crate::graph::{build_affinity, write_matrix, KernelProfile, KernelSpec, LaplacianKind};
use crate::harness::{
    output, run, write_artifacts, write_validation, ExperimentConfig, ExperimentKind, RunOutcome, ValidationReport,
};
use crate::manifold::{analytic_spectrum, sample, DensityModel, ManifoldModel};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "LAPLAB_OUT_DIR";
/// Output directory used when nothing else is configured.
pub const DEFAULT_OUT_DIR: &str = "results";

/// Exit status for success.
pub const EXIT_OK: i32 = 0;
/// Exit status for invalid configuration or arguments.
pub const EXIT_CONFIG: i32 = 1;
/// Exit status for failures while running.
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "laplab", version, about = "Spectral convergence experiments for graph Laplacians on S¹ and S²")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory [default: config `output.dir`, then $LAPLAB_OUT_DIR, then `results`].
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Override the base seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Override the number of replicas.
    #[arg(long, global = true)]
    pub replicas: Option<usize>,
    /// Worker threads [default: available parallelism].
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Eigensolver backend.
    #[arg(long, global = true, value_parser = ["dense", "iterative"])]
    pub backend: Option<String>,
    /// Only print errors.
    #[arg(long, short, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalue/eigenvector error sweep over an (N, ε) grid.
    Sweep,
    /// Pointwise error of the graph Laplacian against ε.
    Pointwise,
    /// Dirichlet-form convergence check.
    Form,
    /// Heat-kernel or degree diagnostics.
    Validate,
    /// Analytic and empirical eigenvalues side by side for one sample.
    Spectrum(SpectrumArgs),
    /// Regenerate SVGs from a results CSV.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    /// `s1` (circle in R⁴) or `s2` (sphere in R³).
    #[arg(long, default_value = "s1")]
    pub manifold: String,
    /// `uniform` or `nonuniform`.
    #[arg(long, default_value = "uniform")]
    pub density: String,
    /// `un`, `rw` or `dc`.
    #[arg(long, default_value = "rw")]
    pub laplacian: String,
    /// `gaussian` or `indicator`.
    #[arg(long, default_value = "gaussian")]
    pub kernel: String,
    /// Number of sample points.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Kernel bandwidth ε.
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    /// Number of eigenvalues shown, including the zero one.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Also write the Laplacian matrix in the binary dump format.
    #[arg(long)]
    pub dump_matrix: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Results CSV written by `sweep`, `pointwise` or `form`.
    #[arg(long)]
    pub csv: PathBuf,
}

/// Parses a value by its configuration-file name (e.g. `s1`, `rw`).
fn parse_name<'de, T: Deserialize<'de>>(what: &str, value: &'de str) -> Result<T> {
    let de: StrDeserializer<'de, DeError> = value.into_deserializer();
    T::deserialize(de).map_err(|e| LabError::Config(format!("invalid {what} `{value}`: {e}")))
}

/// Resolves the output directory: flag, then config, then environment,
/// then [`DEFAULT_OUT_DIR`].
pub fn resolve_out_dir(flag: Option<&Path>, config: Option<&Path>, env: Option<OsString>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| config.map(Path::to_path_buf))
        .or_else(|| env.filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

/// Loads the configuration and applies flag overrides.
pub fn load_config(global: &GlobalArgs) -> Result<ExperimentConfig> {
    let path =
        global.config.as_ref().ok_or_else(|| LabError::Config("this subcommand needs --config <FILE>".into()))?;
    let mut config = ExperimentConfig::from_path(path)?;
    if let Some(seed) = global.seed {
        config.base_seed = seed;
    }
    if let Some(r) = global.replicas {
        config.replicas = r;
    }
    if let Some(w) = global.workers {
        config.workers = Some(w);
    }
    if let Some(b) = &global.backend {
        config.backend = b.parse()?;
    }
    config.validate()?;
    Ok(config)
}

fn out_dir(global: &GlobalArgs, config: Option<&ExperimentConfig>) -> PathBuf {
    resolve_out_dir(
        global.out_dir.as_deref(),
        config.and_then(|c| c.output.dir.as_deref()),
        std::env::var_os(OUT_DIR_ENV),
    )
}

fn expected_kinds(command: &Command) -> &'static [ExperimentKind] {
    match command {
        Command::Sweep => &[ExperimentKind::EigenSweep],
        Command::Pointwise => &[ExperimentKind::PointwiseCurve],
        Command::Form => &[ExperimentKind::FormCheck],
        Command::Validate => &[ExperimentKind::HeatKernelCheck, ExperimentKind::DegreeCheck],
        Command::Spectrum(_) | Command::Plot(_) => &[],
    }
}

/// Runs a parsed command, writing human-readable output to `out`.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let global = &cli.global;
    match &cli.command {
        Command::Spectrum(args) => spectrum(global, args, out),
        Command::Plot(args) => {
            let dir = match &global.out_dir {
                Some(d) => d.clone(),
                None => args.csv.parent().map(Path::to_path_buf).unwrap_or_default(),
            };
            let (_, paths) = output::plot_from_csv(&args.csv, &dir)?;
            for p in paths {
                say(global, out, &format!("wrote {}", p.display()));
            }
            Ok(())
        }
        command => {
            let config = load_config(global)?;
            let kinds = expected_kinds(command);
            if !kinds.contains(&config.experiment) {
                let names: Vec<&str> = kinds.iter().map(|k| k.name()).collect();
                return Err(LabError::Config(format!(
                    "configuration describes a `{}` experiment; this subcommand runs {}",
                    config.experiment.name(),
                    names.join(" or ")
                )));
            }
            let dir = out_dir(global, Some(&config));
            match run(&config)? {
                RunOutcome::Sweep(result) => {
                    let artifacts = write_artifacts(&dir, &result, config.output.plots)?;
                    for m in result.aggregate.metrics.iter().filter(|m| m.slope.is_some()) {
                        let fit = m.slope.as_ref().expect("filtered");
                        say(global, out, &format!("{}: slope {:.3} (r² {:.3})", m.metric, fit.slope, fit.r2));
                    }
                    for c in &result.aggregate.curves {
                        let fmt = |f: &Option<crate::analysis::SlopeFit>| {
                            f.as_ref().map_or("n/a".to_string(), |f| format!("{:.3}", f.slope))
                        };
                        say(
                            global,
                            out,
                            &format!(
                                "N={}: small-eps slope {}, large-eps slope {}",
                                c.n,
                                fmt(&c.small_eps_slope),
                                fmt(&c.large_eps_slope)
                            ),
                        );
                    }
                    if result.aggregate.failures > 0 {
                        say(global, out, &format!("{} cells failed", result.aggregate.failures));
                    }
                    let mut written = artifacts.csv.into_iter().collect::<Vec<_>>();
                    written.push(artifacts.json);
                    written.extend(artifacts.svgs);
                    for p in written {
                        say(global, out, &format!("wrote {}", p.display()));
                    }
                    Ok(())
                }
                RunOutcome::Validation(report) => {
                    let artifacts = write_validation(&dir, &report)?;
                    print_report(global, out, &report);
                    say(global, out, &format!("wrote {}", artifacts.json.display()));
                    let failed: Vec<&str> =
                        report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
                    if failed.is_empty() {
                        Ok(())
                    } else {
                        Err(LabError::ChecksFailed(failed.join(", ")))
                    }
                }
            }
        }
    }
}

fn say(global: &GlobalArgs, out: &mut dyn Write, line: &str) {
    if !global.quiet {
        let _ = writeln!(out, "{line}");
    }
}

fn print_report(global: &GlobalArgs, out: &mut dyn Write, report: &ValidationReport) {
    for (label, checks) in [("", &report.checks), (" (supplementary)", &report.supplementary)] {
        for c in checks {
            let status = if c.passed { "PASS" } else { "FAIL" };
            say(
                global,
                out,
                &format!("{status} {}{label}: measured {:.4e}, threshold {:.4e}", c.name, c.measured, c.threshold),
            );
        }
    }
}

fn spectrum(global: &GlobalArgs, args: &SpectrumArgs, out: &mut dyn Write) -> Result<()> {
    let manifold: ManifoldModel = parse_name("manifold", &args.manifold)?;
    let density: DensityModel = parse_name("density", &args.density)?;
    let kind: LaplacianKind = parse_name("laplacian", &args.laplacian)?;
    let profile: KernelProfile = parse_name("kernel", &args.kernel)?;
    let backend: Backend = match &global.backend {
        Some(b) => b.parse()?,
        None => Backend::default(),
    };
    if args.k == 0 || args.k >= args.n {
        return Err(LabError::Config(format!("--k must lie in 1..{}", args.n)));
    }
    if kind == LaplacianKind::Unnormalized && !density.is_uniform() {
        return Err(LabError::NonUniformUnnormalized);
    }
    let samples = sample(manifold, density, args.n, global.seed.unwrap_or(0))?;
    let spec = KernelSpec::new(profile, args.eps, manifold.intrinsic_dim())?;
    let ops = build_affinity(&samples, &spec, kind)?;
    if let Some(path) = &args.dump_matrix {
        write_matrix(path, &ops.laplacian_matrix()?)?;
    }
    // The solver returns one pair beyond `k_max`.
    let spectral = solve_lowest(&ops, args.k.saturating_sub(1).max(1), backend)?;
    let analytic = analytic_spectrum(manifold, args.k);
    let _ = writeln!(out, "{:>4}  {:>14}  {:>14}  {:>10}", "k", "mu", "lambda", "rel_err");
    for k in 0..args.k {
        let mu = analytic.eigenvalues[k];
        let lambda = spectral.eigenvalues[k];
        let rel = if mu > 0.0 { format!("{:.3e}", (lambda - mu).abs() / mu) } else { "-".into() };
        let _ = writeln!(out, "{:>4}  {mu:>14.3}  {lambda:>14.3}  {rel:>10}", k + 1);
    }
    if let Some(path) = &args.dump_matrix {
        say(global, out, &format!("wrote {}", path.display()));
    }
    Ok(())
}

/// Maps an error to its exit status.
pub fn exit_code(e: &LabError) -> i32 {
    if e.is_config_error() {
        EXIT_CONFIG
    } else {
        EXIT_RUNTIME
    }
}

/// Entry point shared by the binary and the tests: parses `argv`, runs,
/// reports errors on standard error, and returns the exit status.
pub fn main_with_args<I, T>(argv: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            };
        }
    };
    let level = if cli.global.quiet { "error" } else { "info" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    match execute(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("laplab: error: {e}");
            exit_code(&e)
        }
    }
}

/// Runs the CLI on the process arguments.
pub fn main() -> i32 {
    main_with_args(std::env::args_os(), &mut std::io::stdout())
}
