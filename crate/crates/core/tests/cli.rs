//! End-to-end tests of the `laplab` binary: exit codes, artifacts,
//! output-directory precedence, overrides and the plot round trip.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use laplab::harness::{read_records_csv, CSV_HEADER};

fn laplab(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_laplab"));
    cmd.args(args).env_remove("LAPLAB_OUT_DIR").env("RUST_LOG", "error");
    if let Some(dir) = env_out {
        cmd.env("LAPLAB_OUT_DIR", dir);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(format!("{name}.toml"));
    fs::write(&path, format!("name = \"{name}\"\n{body}")).unwrap();
    path
}

const SMALL_SWEEP: &str = r#"
experiment = "eigen_sweep"
manifold = "s1"
n_grid = [200, 300]
eps_grid = { min = 3e-4, max = 1e-3, count = 2 }
replicas = 2
[output]
record_timings = false
"#;

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn sweep_writes_csv_json_and_two_svgs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small", SMALL_SWEEP);
    let out = tmp.path().join("out");
    let o = laplab(&["sweep", "--config", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["small.csv", "small.json", "small_heatmap.svg", "small_best.svg"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let text = fs::read_to_string(out.join("small.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
    // 2 N × 2 ε × 2 replicas × 2 metrics.
    assert_eq!(read_records_csv(out.join("small.csv")).unwrap().len(), 16);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("small.json")).unwrap()).unwrap();
    assert!(json["aggregate"]["metrics"][0]["slope"]["r2"].is_number());
}

#[test]
fn plot_regenerates_identical_svgs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small", SMALL_SWEEP);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let o = laplab(&["sweep", "--config", cfg.to_str().unwrap(), "--out-dir", a.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = a.join("small.csv");
    let o = laplab(&["plot", "--csv", csv.to_str().unwrap(), "--out-dir", b.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["small_heatmap.svg", "small_best.svg"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn missing_config_exits_1_and_names_the_path() {
    let o = laplab(&["sweep", "--config", "missing.toml"], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing.toml"), "{}", stderr(&o));
}

#[test]
fn config_errors_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let typo = write_config(tmp.path(), "typo", &format!("{SMALL_SWEEP}\n").replace("replicas", "replicaz"));
    let o = laplab(&["sweep", "--config", typo.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("replicaz"), "{}", stderr(&o));

    let o = laplab(&["sweep", "--config", typo.to_str().unwrap(), "--backend", "gpu"], None);
    assert_eq!(o.status.code(), Some(1));

    // A sweep configuration handed to another subcommand.
    let cfg = write_config(tmp.path(), "small", SMALL_SWEEP);
    let o = laplab(&["form", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1));

    let o = laplab(&["spectrum", "--manifold", "s3"], None);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn runtime_failures_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    // Every cell of an indicator-kernel sweep at a tiny bandwidth has
    // isolated vertices.
    let cfg = write_config(
        tmp.path(),
        "broken",
        r#"
experiment = "eigen_sweep"
manifold = "s1"
kernel = "indicator"
n_grid = [100, 120]
eps_grid = [1e-9]
replicas = 1
"#,
    );
    let out = tmp.path().join("out");
    let o = laplab(&["sweep", "--config", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    let o = laplab(&["plot", "--csv", tmp.path().join("nothing.csv").to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn out_dir_falls_back_to_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small", SMALL_SWEEP);
    let env_dir = tmp.path().join("from_env");
    let o = laplab(&["--quiet", "sweep", "--config", cfg.to_str().unwrap()], Some(&env_dir));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(env_dir.join("small.csv").is_file());
    assert!(o.stdout.is_empty());

    // The flag wins over the environment.
    let flag_dir = tmp.path().join("from_flag");
    let o =
        laplab(&["sweep", "--config", cfg.to_str().unwrap(), "--out-dir", flag_dir.to_str().unwrap()], Some(&env_dir));
    assert_eq!(o.status.code(), Some(0));
    assert!(flag_dir.join("small.csv").is_file());
}

#[test]
fn seed_override_changes_records_not_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small", SMALL_SWEEP);
    let run = |seed: &str, dir: &str| {
        let out = tmp.path().join(dir);
        let o = laplab(
            &[
                "sweep",
                "--config",
                cfg.to_str().unwrap(),
                "--out-dir",
                out.to_str().unwrap(),
                "--seed",
                seed,
                "--replicas",
                "1",
            ],
            None,
        );
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        read_records_csv(out.join("small.csv")).unwrap()
    };
    let a = run("1", "a");
    let b = run("2", "b");
    let again = run("1", "c");
    assert_eq!(a, again);
    assert_eq!(a.len(), b.len());
    assert_eq!(a.len(), 8);
    assert!(a.iter().zip(&b).any(|(x, y)| x.value != y.value));
    assert!(a.iter().zip(&b).all(|(x, y)| x.metric == y.metric && x.n == y.n && x.eps == y.eps));
}

#[test]
fn spectrum_prints_analytic_and_empirical_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let dump = tmp.path().join("l.bin");
    let o = laplab(
        &[
            "spectrum",
            "--manifold",
            "s1",
            "--density",
            "uniform",
            "--laplacian",
            "rw",
            "--n",
            "1000",
            "--eps",
            "1e-3",
            "--k",
            "10",
            "--dump-matrix",
            dump.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let mu: Vec<&str> = text.lines().skip(1).take(10).map(|l| l.split_whitespace().nth(1).unwrap()).collect();
    assert_eq!(&mu[..4], ["0.000", "39.478", "39.478", "157.914"]);
    let m = laplab::graph::read_matrix(&dump).unwrap();
    assert_eq!((m.nrows(), m.ncols()), (1000, 1000));
    assert_eq!(fs::metadata(&dump).unwrap().len(), 16 + 8 * 1000 * 1000);
}

#[test]
fn validate_reports_and_exit_status() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "deg",
        r#"
experiment = "degree_check"
manifold = "s1"
n_grid = [600]
eps_grid = [3e-4]
degree_tolerance = 10.0
"#,
    );
    let out = tmp.path().join("out");
    let o = laplab(&["validate", "--config", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS row_stochastic"));
    assert!(out.join("deg.json").is_file());

    // An unattainable tolerance turns into a failing check and exit 2.
    let strict = write_config(tmp.path(), "strict", "experiment = \"degree_check\"\nmanifold = \"s1\"\nn_grid = [300]\neps_grid = [3e-4]\ndegree_tolerance = 1e-9\n");
    let o = laplab(&["validate", "--config", strict.to_str().unwrap(), "--out-dir", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("degree_band"));
}

#[test]
fn shipped_configs_parse() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut count = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            laplab::harness::ExperimentConfig::from_path(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            count += 1;
        }
    }
    assert!(count >= 5);
}
