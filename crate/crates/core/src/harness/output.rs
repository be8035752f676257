//! Artifact files: results CSV, aggregate JSON and SVG plots.

use std::fs;
use std::path::{Path, PathBuf};

use super::svg::{best_svg, curve_svg, heatmap_svg};
use super::sweep::{aggregate, Aggregate, Record, SweepResult};
use super::validation::ValidationReport;
use crate::error::{LabError, Result};

/// Header of every results CSV.
pub const CSV_HEADER: &str =
    "experiment,manifold,density,laplacian,kernel,N,eps,replica,metric,value,wall_ms,solver,residual";

/// Writes records as CSV with [`CSV_HEADER`]. Floats use the shortest
/// representation that round-trips.
pub fn write_records_csv(path: impl AsRef<Path>, records: &[Record]) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    if records.is_empty() {
        writer.write_record(CSV_HEADER.split(',')).map_err(|e| csv_error(path, e))?;
    }
    for r in records {
        writer.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    writer.flush().map_err(|e| LabError::io(path, e))?;
    Ok(())
}

/// Reads a results CSV, rejecting files whose header differs from
/// [`CSV_HEADER`].
pub fn read_records_csv(path: impl AsRef<Path>) -> Result<Vec<Record>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?;
    let header: Vec<&str> = header.iter().collect();
    if header.join(",") != CSV_HEADER {
        return Err(LabError::Config(format!("{}: unexpected CSV header `{}`", path.display(), header.join(","))));
    }
    reader.deserialize().collect::<std::result::Result<Vec<Record>, _>>().map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> LabError {
    LabError::Csv(format!("{}: {e}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| LabError::io(path, e))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| LabError::Json(e.to_string()))?;
    write_text(path, &(text + "\n"))
}

/// Paths of the files written for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub csv: Option<PathBuf>,
    pub json: PathBuf,
    pub svgs: Vec<PathBuf>,
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))
}

/// Writes the two SVGs of an aggregate: `<name>_heatmap.svg` and
/// `<name>_best.svg` (for pointwise curves, the error-vs-ε curve).
pub fn write_plots(dir: impl AsRef<Path>, agg: &Aggregate) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    create_dir(dir)?;
    let heat = dir.join(format!("{}_heatmap.svg", agg.name));
    write_text(&heat, &heatmap_svg(agg))?;
    let best = dir.join(format!("{}_best.svg", agg.name));
    let second = if agg.curves.is_empty() { best_svg(agg) } else { curve_svg(agg) };
    write_text(&best, &second)?;
    Ok(vec![heat, best])
}

/// Writes `<name>.csv`, `<name>.json` and, when `plots`, the SVGs.
pub fn write_artifacts(dir: impl AsRef<Path>, result: &SweepResult, plots: bool) -> Result<Artifacts> {
    let dir = dir.as_ref();
    create_dir(dir)?;
    let name = &result.aggregate.name;
    let csv = dir.join(format!("{name}.csv"));
    write_records_csv(&csv, &result.records)?;
    let json = dir.join(format!("{name}.json"));
    let summary = serde_json::json!({
        "aggregate": result.aggregate,
        "extras": result.extras,
        "elapsed_ms": result.elapsed_ms,
    });
    write_json(&json, &summary)?;
    let svgs = if plots { write_plots(dir, &result.aggregate)? } else { Vec::new() };
    Ok(Artifacts { csv: Some(csv), json, svgs })
}

/// Writes a validation report as `<name>.json`.
pub fn write_validation(dir: impl AsRef<Path>, report: &ValidationReport) -> Result<Artifacts> {
    let dir = dir.as_ref();
    create_dir(dir)?;
    let json = dir.join(format!("{}.json", report.name));
    write_json(&json, report)?;
    Ok(Artifacts { csv: None, json, svgs: Vec::new() })
}

/// Regenerates the SVGs of a results CSV into `dir`; the name is the CSV
/// file stem. Returns the aggregate and the written paths.
pub fn plot_from_csv(csv: impl AsRef<Path>, dir: impl AsRef<Path>) -> Result<(Aggregate, Vec<PathBuf>)> {
    let csv = csv.as_ref();
    let name = csv
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| LabError::Config(format!("{}: no file name", csv.display())))?;
    let records = read_records_csv(csv)?;
    let agg = aggregate(name, &records)?;
    let paths = write_plots(dir, &agg)?;
    Ok((agg, paths))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(metric: &str, value: f64, residual: Option<f64>) -> Record {
        Record {
            experiment: "eigen_sweep".into(),
            manifold: "s1".into(),
            density: "uniform".into(),
            laplacian: "rw".into(),
            kernel: "gaussian".into(),
            n: 100,
            eps: 1e-3,
            replica: 0,
            metric: metric.into(),
            value,
            wall_ms: 1.5,
            solver: "iterative".into(),
            residual,
        }
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let records = vec![record("rel_err_v", 0.1 + 0.2, Some(1e-12)), record("failed", f64::NAN, None)];
        write_records_csv(&path, &records).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        let back = read_records_csv(&path).unwrap();
        assert_eq!(back[0], records[0]);
        assert!(back[1].value.is_nan() && back[1].residual.is_none());
    }

    #[test]
    fn empty_csv_has_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.csv");
        write_records_csv(&path, &[]).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap().trim(), CSV_HEADER);
    }

    #[test]
    fn rejects_foreign_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(matches!(read_records_csv(&path), Err(LabError::Config(_))));
    }
}
