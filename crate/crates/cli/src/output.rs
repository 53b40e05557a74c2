//! CSV tables, the run manifest and the run-info file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::ScenarioConfig;

/// Formats `x` rounded to 15 significant digits, in Rust's shortest
/// round-trip notation, with negative zero written as zero.
pub fn number(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.14e}").parse().unwrap_or(x);
    let rounded = if rounded == 0.0 { 0.0 } else { rounded };
    format!("{rounded:?}")
}

/// An in-memory CSV table, written in one go.
#[derive(Debug, Clone)]
pub struct Table {
    text: String,
    columns: usize,
}

pub enum Cell {
    Num(f64),
    Int(usize),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n)
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            text: format!("{}\n", header.join(",")),
            columns: header.len(),
        }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.columns);
        let mut first = true;
        for c in cells {
            if !first {
                self.text.push(',');
            }
            first = false;
            match c {
                Cell::Num(x) => self.text.push_str(&number(x)),
                Cell::Int(n) => {
                    let _ = write!(self.text, "{n}");
                }
                Cell::Text(s) => self.text.push_str(&s),
                Cell::Empty => {}
            }
        }
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

/// A compute failure at one sweep point.
#[derive(Debug, Clone, Serialize)]
pub struct PointError {
    pub index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ion_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Units {
    pub nu_x_rad_per_s: f64,
    pub length_unit_m: f64,
    pub time_unit_s: f64,
    /// Multiply a dimensionless time by this to get microseconds.
    pub time_unit_us: f64,
    /// Multiply a dimensionless angular frequency by this to get MHz.
    pub frequency_unit_mhz: f64,
    pub hbar_tilde: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Tolerances {
    pub equilibrium_gradient: f64,
    pub linear_deadband: f64,
    pub max_condition_u: f64,
    pub modulus_slack: f64,
    pub revival_threshold: f64,
    pub spectrum_log_floor: f64,
    pub spectrum_peak_threshold: f64,
}

/// Everything needed to reproduce a dataset. Timestamps live elsewhere.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub threads: usize,
    /// All computations are deterministic; no random seeds are used.
    pub seeds: Vec<u64>,
    pub outputs: Vec<String>,
    pub points_evaluated: usize,
    pub points_failed: usize,
    pub units: Units,
    pub tolerances: Tolerances,
    /// Dimensionless quantities of the run, keyed by name.
    pub dimensionless: BTreeMap<String, f64>,
    /// Physical counterparts of the dimensionless quantities.
    pub physical: BTreeMap<String, f64>,
    pub lists: BTreeMap<String, Vec<f64>>,
    pub config: ScenarioConfig,
    pub errors: Vec<PointError>,
}

#[derive(Debug, Serialize)]
struct RunInfo {
    command: String,
    unix_time_s: u64,
}

pub fn write_dataset(dir: &Path, name: &str, table: &Table) -> io::Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, table.as_str())?;
    Ok(path)
}

pub fn write_manifest(dir: &Path, manifest: &Manifest) -> io::Result<()> {
    let text = toml::to_string(manifest).map_err(io::Error::other)?;
    fs::write(dir.join("manifest.toml"), text)?;
    let info = RunInfo {
        command: manifest.command.clone(),
        unix_time_s: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    fs::write(dir.join("run_info.toml"), toml::to_string(&info).map_err(io::Error::other)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(number(0.0), "0.0");
        assert_eq!(number(-0.0), "0.0");
        assert_eq!(number(1.0), "1.0");
        assert_eq!(number(0.1 + 0.2), "0.3");
        assert_eq!(number(1.0 / 3.0), "0.333333333333333");
        assert_eq!(number(-2.5e-50), "-2.5e-50");
        assert_eq!(number(123456789.12345679), "123456789.123457");
    }

    #[test]
    fn table_rows() {
        let mut t = Table::new(&["a", "b", "c"]);
        t.row(vec![1.0.into(), Cell::Empty, "x".into()]);
        t.row(vec![3usize.into(), Some(2.0).into(), None::<f64>.into()]);
        assert_eq!(t.as_str(), "a,b,c\n1.0,,x\n3,2.0,\n");
    }
}
