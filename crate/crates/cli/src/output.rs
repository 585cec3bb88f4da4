//! Deterministic CSV/JSON rendering and atomic file output.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::error::Failure;

/// Environment variable that redirects relative output paths.
pub const OUT_DIR_ENV: &str = "VIBRO_OUT_DIR";

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    Missing,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Num)
    }
}

/// 17 significant digits in scientific notation.
pub fn format_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => format_num(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Result of a command: a CSV table and a JSON payload.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub command: &'static str,
    pub table: Table,
    pub result: serde_json::Value,
}

impl Artifact {
    pub fn new<T: Serialize>(command: &'static str, table: Table, result: &T) -> Result<Self, Failure> {
        let result = serde_json::to_value(result).map_err(|e| Failure::Internal(e.to_string()))?;
        Ok(Self { command, table, result })
    }

    pub fn render(&self, cfg: &RunConfig) -> Result<String, Failure> {
        match cfg.format {
            Format::Csv => {
                let config = serde_json::to_string(cfg).map_err(|e| Failure::Internal(e.to_string()))?;
                let mut out = format!("# vibro {VERSION}\n# command: {}\n# config: {config}\n", self.command);
                out.push_str(&self.table.header.join(","));
                out.push('\n');
                for row in &self.table.rows {
                    let cells: Vec<String> = row.iter().map(Cell::render).collect();
                    out.push_str(&cells.join(","));
                    out.push('\n');
                }
                Ok(out)
            }
            Format::Json => {
                let doc = serde_json::json!({
                    "tool": "vibro",
                    "version": VERSION,
                    "command": self.command,
                    "seed": cfg.seed,
                    "config": cfg,
                    "result": self.result,
                });
                let mut s = serde_json::to_string_pretty(&doc).map_err(|e| Failure::Internal(e.to_string()))?;
                s.push('\n');
                Ok(s)
            }
        }
    }
}

/// Output path: explicit path or `<command>.<ext>`, with relative paths placed
/// under `$VIBRO_OUT_DIR` when it is set.
pub fn resolve_output(cfg: &RunConfig, command: &str, out_dir: Option<&Path>) -> PathBuf {
    let path = cfg.out.clone().unwrap_or_else(|| PathBuf::from(format!("{command}.{}", cfg.format.extension())));
    match out_dir {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path,
    }
}

/// Writes to a temporary file in the target directory and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Failure::Io(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_have_seventeen_significant_digits() {
        assert_eq!(format_num(0.1), "1.0000000000000001e-1");
        assert_eq!(format_num(-2.0), "-2.0000000000000000e0");
        let x = 0.1002798898_f64;
        assert_eq!(format_num(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn relative_paths_follow_the_output_directory() {
        let cfg = RunConfig::default();
        let p = resolve_output(&cfg, "fixpoint", Some(Path::new("/tmp/o")));
        assert_eq!(p, PathBuf::from("/tmp/o/fixpoint.csv"));
        assert_eq!(resolve_output(&cfg, "fixpoint", None), PathBuf::from("fixpoint.csv"));
    }
}
