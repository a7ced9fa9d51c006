//! CSV files for plotting. Rows are written in the order the experiment
//! produced them, so identical inputs give byte-identical files.

use crate::config::Mobility;
use crate::experiment::{ConvergenceCurve, ResultRow, Sweep, TightnessCell};
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("nothing to write for {0}")]
    Empty(&'static str),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

/// Mobility label usable in a file name.
pub fn file_tag(m: Mobility) -> String {
    m.label().replace('/', "-")
}

fn create_dir(dir: &Path) -> Result<(), OutputError> {
    fs::create_dir_all(dir).map_err(|source| OutputError::Io { path: dir.into(), source })
}

fn write_records<T: Serialize>(path: &Path, records: &[T], what: &'static str) -> Result<PathBuf, OutputError> {
    if records.is_empty() {
        return Err(OutputError::Empty(what));
    }
    let csv_err = |source| OutputError::Csv { path: path.into(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in records {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|source| OutputError::Io { path: path.into(), source })?;
    Ok(path.into())
}

fn write_table(path: &Path, header: &[String], rows: &[Vec<String>], what: &'static str) -> Result<PathBuf, OutputError> {
    if rows.is_empty() {
        return Err(OutputError::Empty(what));
    }
    let csv_err = |source| OutputError::Csv { path: path.into(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush().map_err(|source| OutputError::Io { path: path.into(), source })?;
    Ok(path.into())
}

/// Per-realization rows.
pub fn write_rows(path: &Path, rows: &[ResultRow]) -> Result<PathBuf, OutputError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    write_records(path, rows, "result rows")
}

/// `sweep_<mobility>.csv` (mean SE with CI per ΔG and scheme),
/// `gains_<mobility>.csv` when all schemes ran, and the raw rows.
pub fn write_sweep(dir: &Path, sweep: &Sweep) -> Result<Vec<PathBuf>, OutputError> {
    create_dir(dir)?;
    let tag = file_tag(sweep.mobility);
    let mut out = vec![write_records(&dir.join(format!("sweep_{tag}.csv")), &sweep.summary, "sweep summary")?];
    if !sweep.gains.is_empty() {
        out.push(write_records(&dir.join(format!("gains_{tag}.csv")), &sweep.gains, "gains")?);
    }
    out.push(write_records(&dir.join(format!("rows_sweep_{tag}.csv")), &sweep.rows, "result rows")?);
    Ok(out)
}

/// `convergence.csv` with one mean column per mobility profile and
/// `convergence_runs.csv` in long form.
pub fn write_convergence(dir: &Path, curves: &[ConvergenceCurve]) -> Result<Vec<PathBuf>, OutputError> {
    let len = curves.iter().map(|c| c.mean.len()).max().unwrap_or(0);
    if len == 0 {
        return Err(OutputError::Empty("convergence curves"));
    }
    create_dir(dir)?;
    let mut header = vec!["iteration".to_string()];
    header.extend(curves.iter().map(|c| c.mobility.label()));
    let rows: Vec<Vec<String>> = (0..len)
        .map(|i| {
            let mut r = vec![i.to_string()];
            r.extend(curves.iter().map(|c| c.mean.get(i).map_or(String::new(), |v| v.to_string())));
            r
        })
        .collect();
    let mean = write_table(&dir.join("convergence.csv"), &header, &rows, "convergence curves")?;

    let header: Vec<String> = ["mobility", "run", "iteration", "objective"].map(String::from).to_vec();
    let mut long = Vec::new();
    for c in curves {
        for (run, t) in c.traces.iter().enumerate() {
            for (i, v) in t.iter().enumerate() {
                long.push(vec![c.mobility.label(), run.to_string(), i.to_string(), v.to_string()]);
            }
        }
    }
    let runs = write_table(&dir.join("convergence_runs.csv"), &header, &long, "convergence traces")?;
    Ok(vec![mean, runs])
}

/// `tightness.csv`, one row per (sensing target, ΔG) cell.
pub fn write_tightness(dir: &Path, cells: &[TightnessCell]) -> Result<Vec<PathBuf>, OutputError> {
    create_dir(dir)?;
    Ok(vec![write_records(&dir.join("tightness.csv"), cells, "tightness cells")?])
}
