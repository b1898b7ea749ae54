//! CSV emission with a fixed float format: 17 significant digits in
//! scientific notation (`1.0000000000000000e0`), `\n` line endings.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Float,
    Int,
    Text,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn kind(&self) -> Kind {
        match self {
            Cell::Float(_) => Kind::Float,
            Cell::Int(_) => Kind::Int,
            Cell::Text(_) => Kind::Text,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::Int(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    pub columns: Vec<(&'static str, Kind)>,
}

impl Schema {
    pub fn new(columns: &[(&'static str, Kind)]) -> Self {
        Self { columns: columns.to_vec() }
    }

    /// All columns floating point.
    pub fn floats(names: &[&'static str]) -> Self {
        Self { columns: names.iter().map(|&n| (n, Kind::Float)).collect() }
    }

    pub fn header(&self) -> Vec<&'static str> {
        self.columns.iter().map(|(n, _)| *n).collect()
    }
}

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn render(cell: &Cell) -> String {
    match cell {
        Cell::Float(x) => format_float(*x),
        Cell::Int(i) => i.to_string(),
        Cell::Text(s) => s.clone(),
    }
}

fn check(schema: &Schema, rows: &[Vec<Cell>]) -> Result<(), CsvError> {
    for (r, row) in rows.iter().enumerate() {
        if row.len() != schema.columns.len() {
            return Err(CsvError::Schema(format!(
                "row {r} has {} cells, schema has {} columns",
                row.len(),
                schema.columns.len()
            )));
        }
        for (cell, (name, kind)) in row.iter().zip(&schema.columns) {
            if cell.kind() != *kind {
                return Err(CsvError::Schema(format!("row {r}, column {name}: expected {kind:?}, got {cell:?}")));
            }
            if let Cell::Float(x) = cell {
                if !x.is_finite() {
                    return Err(CsvError::Schema(format!("row {r}, column {name}: non-finite value {x}")));
                }
            }
        }
    }
    Ok(())
}

/// Renders the table into memory; nothing is produced if any row is invalid.
pub fn to_bytes(schema: &Schema, rows: &[Vec<Cell>]) -> Result<Vec<u8>, CsvError> {
    check(schema, rows)?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let to_io = |e: csv::Error| CsvError::Io { path: PathBuf::new(), source: io::Error::other(e) };
    w.write_record(schema.header()).map_err(to_io)?;
    for row in rows {
        w.write_record(row.iter().map(render)).map_err(to_io)?;
    }
    w.into_inner().map_err(|e| CsvError::Io { path: PathBuf::new(), source: io::Error::other(e.to_string()) })
}

pub fn emit_csv(rows: &[Vec<Cell>], schema: &Schema, path: &Path) -> Result<(), CsvError> {
    let bytes = to_bytes(schema, rows)?;
    let io_err = |source| CsvError::Io { path: path.to_path_buf(), source };
    let mut f = File::create(path).map_err(io_err)?;
    f.write_all(&bytes).map_err(io_err)?;
    Ok(())
}
