//! Tabular artifacts in CSV or JSON, each tagged with the scenario hash and
//! tool version, written atomically.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(u64),
    Float(f64),
    /// Written as an empty CSV field or JSON `null`.
    Missing,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        if v.is_finite() {
            Cell::Float(v)
        } else {
            Cell::Missing
        }
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::from)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &'static str, columns: &[&'static str]) -> Self {
        Self {
            name,
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format, scenario_hash: &str) -> String {
        match format {
            Format::Csv => {
                let mut out = format!("# scenario_hash={scenario_hash} tool_version={TOOL_VERSION}\n");
                out.push_str(&self.columns.join(","));
                out.push('\n');
                for row in &self.rows {
                    for (i, cell) in row.iter().enumerate() {
                        if i > 0 {
                            out.push(',');
                        }
                        match cell {
                            Cell::Int(v) => write!(out, "{v}").unwrap(),
                            Cell::Float(v) => write!(out, "{v:e}").unwrap(),
                            Cell::Missing => {}
                        }
                    }
                    out.push('\n');
                }
                out
            }
            Format::Json => {
                #[derive(Serialize)]
                struct Doc<'a> {
                    scenario_hash: &'a str,
                    tool_version: &'a str,
                    columns: &'a [&'static str],
                    rows: &'a [Vec<Cell>],
                }
                let mut s = serde_json::to_string(&Doc {
                    scenario_hash,
                    tool_version: TOOL_VERSION,
                    columns: &self.columns,
                    rows: &self.rows,
                })
                .expect("tables serialize");
                s.push('\n');
                s
            }
        }
    }
}

/// Writes `contents` to `dir/name` through a temporary file in the same
/// directory and a rename, so readers never see a partial file.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    let io = |path: &Path, e: std::io::Error| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let target = dir.join(name);
    let temp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    fs::write(&temp, contents).map_err(|e| io(&temp, e))?;
    fs::rename(&temp, &target).map_err(|e| {
        let _ = fs::remove_file(&temp);
        io(&target, e)
    })?;
    Ok(target)
}
