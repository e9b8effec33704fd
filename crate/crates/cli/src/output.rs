//! CSV and manifest writers.
//!
//! Every file starts with
//!
//! ```text
//! # pdpstar-csv v1
//! # config {...}
//! ```
//!
//! followed by a header row and data rows. Floats use Rust's shortest
//! round-trip formatting, so files depend only on the computed values.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::args::{EngineKind, ModelKind, Observable};
use crate::CliError;

pub const CSV_FORMAT: &str = "pdpstar-csv v1";
pub const MANIFEST_FORMAT: &str = "pdpstar-manifest v1";

/// Parameters that determine the output. Worker count and output path are
/// left out so they cannot change the bytes written.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub engine: Option<EngineKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observable: Option<Observable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_bath: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model_file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_traj: Option<u64>,
    pub t_max: f64,
    pub steps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn new(command: &'static str, t_max: f64, steps: usize) -> Self {
        Self {
            command,
            engine: None,
            observable: None,
            model: None,
            n_bath: None,
            coupling: None,
            model_file: None,
            n_traj: None,
            t_max,
            steps,
            seed: None,
        }
    }
}

/// Acceptance summary over the rows that carry a `sigma_distance`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub rows_checked: usize,
    pub fraction_within_4se: f64,
    pub max_sigma_distance: f64,
    pub passed: bool,
}

/// Minimum share of rows within 4 standard errors for a run to pass.
pub const ACCEPT_FRACTION: f64 = 0.95;
pub const ACCEPT_SIGMAS: f64 = 4.0;

impl Summary {
    pub fn from_distances(d: &[f64]) -> Self {
        let within = d.iter().filter(|&&x| x <= ACCEPT_SIGMAS).count();
        let fraction = if d.is_empty() { 1.0 } else { within as f64 / d.len() as f64 };
        Self {
            rows_checked: d.len(),
            fraction_within_4se: fraction,
            max_sigma_distance: d.iter().copied().fold(0.0, f64::max),
            passed: fraction >= ACCEPT_FRACTION,
        }
    }
}

/// A finished table ready to be written.
#[derive(Debug, Clone)]
pub struct Table {
    pub config: RunConfig,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub summary: Option<Summary>,
}

/// Shortest round-trip form; exponent notation outside `[1e-5, 1e16)`.
pub fn fmt(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

impl Table {
    pub fn new(config: RunConfig, header: &[&'static str]) -> Self {
        Self { config, header: header.to_vec(), rows: Vec::new(), summary: None }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, CliError> {
        let mut buf = Vec::new();
        writeln!(buf, "# {CSV_FORMAT}")?;
        writeln!(buf, "# config {}", serde_json::to_string(&self.config)?)?;
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(buf);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.into_error()))
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    format: &'static str,
    csv_format: &'static str,
    tool_version: &'static str,
    csv_file: String,
    config: &'a RunConfig,
    workers: usize,
    rows: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    summary: Option<Summary>,
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

/// Writes the CSV to `out` (or stdout) and, for files, the manifest beside it.
pub fn emit(table: &Table, out: Option<&Path>, workers: usize) -> Result<(), CliError> {
    let bytes = table.to_bytes()?;
    match out {
        None => std::io::stdout().lock().write_all(&bytes)?,
        Some(path) => {
            std::fs::write(path, &bytes)?;
            let manifest = Manifest {
                format: MANIFEST_FORMAT,
                csv_format: CSV_FORMAT,
                tool_version: env!("CARGO_PKG_VERSION"),
                csv_file: path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
                config: &table.config,
                workers,
                rows: table.rows.len(),
                summary: table.summary,
            };
            let mut text = serde_json::to_string_pretty(&manifest)?;
            text.push('\n');
            std::fs::write(manifest_path(path), text)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_rows() {
        let mut t = Table::new(RunConfig::new("analytic", 1.0, 2), &["t", "v3"]);
        t.push(vec![fmt(0.0), fmt(1.0)]);
        t.push(vec![fmt(0.5), fmt(0.1 + 0.2)]);
        let s = String::from_utf8(t.to_bytes().unwrap()).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "# pdpstar-csv v1");
        assert!(lines[1].starts_with("# config {\"command\":\"analytic\""));
        assert_eq!(&lines[2..], ["t,v3", "0,1", "0.5,0.30000000000000004"]);
        assert!(!s.contains('\r'));
        assert_eq!(fmt(-1.5e-17), "-1.5e-17");
        assert_eq!(fmt(f64::INFINITY), "inf");
    }

    #[test]
    fn summary_threshold() {
        let d: Vec<f64> = (0..20).map(|i| if i == 0 { 5.0 } else { 1.0 }).collect();
        assert!(Summary::from_distances(&d).passed);
        let d = [5.0, 5.0, 1.0, 1.0];
        let s = Summary::from_distances(&d);
        assert!(!s.passed);
        assert_eq!(s.max_sigma_distance, 5.0);
    }

    #[test]
    fn manifest_sits_next_to_csv() {
        assert_eq!(manifest_path(Path::new("out/run.csv")), Path::new("out/run.csv.manifest.json"));
    }
}
