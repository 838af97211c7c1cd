//! Artifacts: the JSON report, CSV tables and the timing sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL: &str = "rough-gauss";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit: Option<f64>,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), pass, value: None, limit: None, detail: detail.into() }
    }

    /// Passes when `value <= limit`.
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            pass: value <= limit,
            value: Some(value),
            limit: Some(limit),
            detail: format!("{value} <= {limit}"),
        }
    }

    /// Passes when `value < limit`.
    pub fn below(name: &str, value: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            pass: value < limit,
            value: Some(value),
            limit: Some(limit),
            detail: format!("{value} < {limit}"),
        }
    }

    /// Passes when `value > limit`.
    pub fn above(name: &str, value: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            pass: value > limit,
            value: Some(value),
            limit: Some(limit),
            detail: format!("{value} > {limit}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}
impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => v.to_string(),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    /// Suffix of the file name, `<stem>.<suffix>.csv`; empty for `<stem>.csv`.
    pub suffix: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(suffix: &str, header: &[&str]) -> Self {
        Table { suffix: suffix.into(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn file_name(&self, stem: &str) -> String {
        if self.suffix.is_empty() {
            format!("{stem}.csv")
        } else {
            format!("{stem}.{}.csv", self.suffix)
        }
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

pub const TOOL_INFO: ToolInfo = ToolInfo { name: TOOL, version: VERSION };

/// Deterministic part of a run: identical bytes for identical inputs.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: ToolInfo,
    pub kind: &'static str,
    pub experiment: String,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub tables: Vec<String>,
    /// Name of the sidecar holding the wall-clock time.
    pub timing: String,
    pub result: serde_json::Value,
}

/// Non-deterministic part of a run, kept out of the report so reports
/// compare byte for byte.
#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub schema_version: u32,
    pub tool: ToolInfo,
    pub experiment: String,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub workers: usize,
    pub wall_clock_seconds: f64,
}

/// A file to be written, relative to the output directory.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub file_name: String,
    pub bytes: Vec<u8>,
}

pub fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("serializable report");
    out.push(b'\n');
    out
}

/// Writes every artifact to a temporary name first, then renames, so a
/// failure leaves no half-written set behind.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut staged = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        let tmp = dir.join(format!(".{}.tmp", a.file_name));
        if let Err(e) = fs::write(&tmp, &a.bytes) {
            for (t, _) in &staged {
                let _ = fs::remove_file(t);
            }
            let _ = fs::remove_file(&tmp);
            return Err(e);
        }
        staged.push((tmp, dir.join(&a.file_name)));
    }
    for (tmp, dest) in &staged {
        fs::rename(tmp, dest)?;
    }
    Ok(staged.into_iter().map(|(_, d)| d).collect())
}
