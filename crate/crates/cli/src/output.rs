//! CSV tables and the JSON manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

/// One CSV field. Floats are written with 17 significant digits.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::I(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::I(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::I(v as i64)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::S(v)
    }
}

pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "NaN".into()
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    columns: Vec<&'static str>,
    body: String,
    rows: usize,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        let mut body = columns.join(",");
        body.push('\n');
        Self {
            columns: columns.to_vec(),
            body,
            rows: 0,
        }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        assert_eq!(cells.len(), self.columns.len(), "row width must match the header");
        for (k, c) in cells.iter().enumerate() {
            if k > 0 {
                self.body.push(',');
            }
            match c {
                Cell::F(v) => self.body.push_str(&format_float(*v)),
                Cell::I(v) => {
                    let _ = write!(self.body, "{v}");
                }
                Cell::S(s) => self.body.push_str(s),
            }
        }
        self.body.push('\n');
        self.rows += 1;
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn contents(&self) -> &str {
        &self.body
    }
}

/// Manifest entry for a written file, path relative to the output root.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileRecord {
    pub path: String,
    pub rows: usize,
    pub columns: Vec<&'static str>,
}

/// Writes tables below one output directory and records them.
#[derive(Debug)]
pub struct Sink {
    root: PathBuf,
    pub files: Vec<FileRecord>,
}

impl Sink {
    pub fn new(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root).map_err(|source| CliError::Io {
            path: root.display().to_string(),
            source,
        })?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, relative: &str, table: &Table) -> Result<(), CliError> {
        let path = self.root.join(relative);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|source| CliError::Io {
                path: parent.display().to_string(),
                source,
            })?;
        }
        std::fs::write(&path, table.contents()).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.files.push(FileRecord {
            path: relative.to_string(),
            rows: table.rows(),
            columns: table.columns.clone(),
        });
        Ok(())
    }

    pub fn write_json(&self, relative: &str, value: &impl Serialize) -> Result<(), CliError> {
        let path = self.root.join(relative);
        let text = serde_json::to_string_pretty(value).expect("manifest is serializable");
        std::fs::write(&path, text + "\n").map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Filename-safe rendering of a parameter value, e.g. `1.5` → `1p5`.
pub fn tag(v: f64) -> String {
    format!("{v}").replace('.', "p").replace('-', "m")
}
