use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{invalid, Result};

use super::checks::CheckOutcome;

/// A CSV table with a fixed header. Cells are stored already formatted.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

/// One formatted cell. Floats use the shortest round-trip representation.
pub enum Cell {
    Int(i64),
    Uint(u64),
    Float(f64),
    Bool(bool),
    Text(String),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Uint(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Uint(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl Cell {
    fn render(self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Uint(v) => v.to_string(),
            Cell::Float(v) if v.is_nan() => "nan".into(),
            Cell::Float(v) if v.is_infinite() => if v > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::Float(v) => format!("{v:?}"),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(v) => v,
        }
    }
}

/// Builds a row from heterogeneous values: `row![n, m, "gaussian", 0.5]`.
#[macro_export]
macro_rules! row {
    ($($v:expr),* $(,)?) => {
        vec![$($crate::experiments::Cell::from($v)),*]
    };
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Appends a row. Panics if the width differs from the header.
    pub fn push(&mut self, cells: Vec<Cell>) {
        assert_eq!(cells.len(), self.columns.len(), "row width must match the header");
        self.rows.push(cells.into_iter().map(Cell::render).collect());
    }

    /// Index of a named column.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(BufWriter::new(File::create(path)?))
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

/// JSON record written next to every CSV.
#[derive(Debug, Clone, Serialize)]
pub struct Sidecar {
    pub experiment: String,
    pub version: String,
    pub base_seed: u64,
    pub params: serde_json::Value,
    pub columns: Vec<String>,
    pub rows: usize,
    pub summary: serde_json::Value,
    pub checks: Vec<CheckOutcome>,
}

impl Sidecar {
    pub fn new(experiment: &str, base_seed: u64, params: serde_json::Value, table: &Table) -> Self {
        Self {
            experiment: experiment.to_owned(),
            version: crate::VERSION.to_owned(),
            base_seed,
            params,
            columns: table.columns().to_vec(),
            rows: table.len(),
            summary: serde_json::Value::Null,
            checks: Vec::new(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }
}

/// The sidecar path for a CSV path: `out.csv` becomes `out.json`.
pub fn sidecar_path(csv: &Path) -> Result<std::path::PathBuf> {
    if csv.extension().is_some_and(|e| e == "json") {
        return Err(invalid("csv output path must not end in .json"));
    }
    Ok(csv.with_extension("json"))
}
