//! CSV tables, the run manifest and the failure record.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which round-trips
//! every `f64`. Column orders are fixed per file; see [`SCHEMA`].

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::RunError;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const FAILURE_FILE: &str = "failure.json";

/// Every CSV file the runner can emit, with its header.
pub const SCHEMA: &[(&str, &[&str])] = &[
    ("equilibria.csv", &["label", "Y", "X"]),
    ("trajectories.csv", &["start", "t", "Y", "X"]),
    (
        "limits.csv",
        &["start", "Y0", "X0", "predicted", "Y_pred", "X_pred", "Y_end", "X_end", "error"],
    ),
    ("separatrix.csv", &["Y", "X"]),
    ("local_quadratic.csv", &["Y", "h", "quadratic", "deviation"]),
    (
        "diagnostics.csv",
        &["t", "r1", "r2", "lyapunov", "I1", "I2", "conc_frac", "argmax_u"],
    ),
    ("ode_profiles.csv", &["x", "d", "u0", "v0", "u", "v"]),
    ("dynamics.csv", &["t", "r1", "r2", "dist_u", "dist_v"]),
    (
        "pde_profiles.csv",
        &["x", "d", "m", "u0", "v0", "u", "v", "u_bar", "v_bar"],
    ),
    (
        "reduced.csv",
        &[
            "t",
            "lambda1",
            "lambda2",
            "pairing_u",
            "pairing_v",
            "w",
            "z",
            "r1",
            "r1_reduced",
            "r2",
            "r2_reduced",
        ],
    ),
    ("steady.csv", &["x", "d", "m", "u_bar", "v_bar"]),
    (
        "sweep_summary.csv",
        &[
            "index",
            "value",
            "status",
            "predicted",
            "r1_predicted",
            "r2_predicted",
            "r1_observed",
            "r2_observed",
            "rel_error_r1",
            "rel_error_r2",
            "error",
        ],
    ),
];

pub fn header_for(name: &str) -> Option<&'static [&'static str]> {
    SCHEMA.iter().find(|(n, _)| *n == name).map(|(_, h)| *h)
}

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// One cell; text cells must not contain commas or newlines.
pub enum Cell {
    F(f64),
    I(usize),
    S(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::I(i)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::S(s.to_owned())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::S(s)
    }
}

/// CSV buffered in memory until the run succeeds.
#[derive(Debug, Clone)]
pub struct CsvFile {
    pub name: &'static str,
    pub body: String,
    pub rows: usize,
    width: usize,
}

impl CsvFile {
    pub fn new(name: &'static str) -> Self {
        let header = header_for(name).unwrap_or_else(|| panic!("{name} is not in the schema"));
        Self {
            name,
            body: format!("{}\n", header.join(",")),
            rows: 0,
            width: header.len(),
        }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        assert_eq!(cells.len(), self.width, "row width for {}", self.name);
        let text: Vec<String> = cells
            .into_iter()
            .map(|c| match c {
                Cell::F(x) => float(x),
                Cell::I(i) => i.to_string(),
                Cell::S(s) => {
                    debug_assert!(!s.contains([',', '\n']));
                    s
                }
            })
            .collect();
        self.body.push_str(&text.join(","));
        self.body.push('\n');
        self.rows += 1;
    }
}

/// Predicted and observed value of one quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub quantity: String,
    pub predicted: Option<f64>,
    pub observed: Option<f64>,
    /// `|observed - predicted| / |predicted|`, or the absolute error when
    /// the prediction is zero.
    pub rel_error: Option<f64>,
}

impl Comparison {
    pub fn new(quantity: impl Into<String>, predicted: Option<f64>, observed: f64) -> Self {
        let observed = observed.is_finite().then_some(observed);
        let rel_error = match (predicted, observed) {
            (Some(p), Some(o)) => Some(relative_error(o, p)),
            _ => None,
        };
        Self {
            quantity: quantity.into(),
            predicted,
            observed,
            rel_error,
        }
    }
}

pub fn relative_error(observed: f64, predicted: f64) -> f64 {
    let diff = (observed - predicted).abs();
    if predicted != 0.0 {
        diff / predicted.abs()
    } else {
        diff
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Software {
    pub name: String,
    pub version: String,
}

impl Software {
    pub fn current() -> Self {
        Self {
            name: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub status: String,
    pub command: String,
    pub software: Software,
    /// Fully resolved configuration as TOML.
    pub config: String,
    pub started_unix: u64,
    pub duration_seconds: f64,
    pub files: Vec<FileEntry>,
    pub prediction: Value,
    pub observed: Vec<Comparison>,
    pub checks: Map<String, Value>,
}

impl Manifest {
    pub fn check(&self, key: &str) -> Option<f64> {
        self.checks.get(key).and_then(Value::as_f64)
    }

    pub fn comparison(&self, quantity: &str) -> Option<&Comparison> {
        self.observed.iter().find(|c| c.quantity == quantity)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub status: String,
    pub command: String,
    pub software: Software,
    /// `validation` (exit code 1) or `runtime` (exit code 2).
    pub kind: String,
    /// Outermost message first.
    pub error_chain: Vec<String>,
    pub config: Option<String>,
    pub duration_seconds: f64,
}

fn io_err(path: &Path, source: std::io::Error) -> RunError {
    RunError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<(), RunError> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), RunError> {
    let mut text = serde_json::to_string_pretty(value).expect("manifest serializes");
    text.push('\n');
    write_text(path, &text)
}

/// Creates `dir` and clears completion markers left by an earlier run.
pub fn prepare_dir(dir: &Path) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    for marker in [MANIFEST_FILE, FAILURE_FILE] {
        let p = dir.join(marker);
        if p.exists() {
            fs::remove_file(&p).map_err(|e| io_err(&p, e))?;
        }
    }
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, RunError> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    serde_json::from_str(&text).map_err(|e| io_err(&path, std::io::Error::other(e)))
}
