//! Tabular results, CSV serialization and the run record.

use std::fmt;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Int(v) => Some(v as f64),
            Cell::Float(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Cell::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match *self {
            Cell::Bool(b) => Some(b),
            _ => None,
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Float(v) if v.is_nan() => Ok(()),
            Cell::Float(v) => write!(f, "{v}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Bool(b) => write!(f, "{b}"),
            Cell::Empty => Ok(()),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
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

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub row_seed: u64,
    /// `ok`, or a failure marker.
    pub status: String,
    pub cells: Vec<Cell>,
}

/// The rows of one experiment, in grid order.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub experiment: String,
    pub seed: u64,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
}

impl SweepResult {
    pub fn new(experiment: &str, seed: u64, columns: &[&str]) -> Self {
        Self {
            experiment: experiment.to_string(),
            seed,
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Appends a row. A NaN metric turns the row into a `nan` marker.
    pub fn push(&mut self, row_seed: u64, cells: Vec<Cell>) {
        assert_eq!(cells.len(), self.columns.len(), "row width");
        let nan = cells.iter().any(|c| matches!(c, Cell::Float(v) if v.is_nan()));
        self.rows.push(Row {
            row_seed,
            status: if nan { "nan".into() } else { "ok".into() },
            cells,
        });
    }

    pub fn push_failure(&mut self, message: &str) {
        self.rows.push(Row {
            row_seed: self.seed,
            status: format!("failed: {message}"),
            cells: vec![Cell::Empty; self.columns.len()],
        });
    }

    pub fn is_complete(&self) -> bool {
        self.rows.iter().all(|r| r.status == "ok")
    }

    pub fn index(&self, column: &str) -> usize {
        self.columns
            .iter()
            .position(|c| c == column)
            .unwrap_or_else(|| panic!("no column {column}"))
    }

    /// The cell of `column` in `row`.
    pub fn get<'a>(&self, row: &'a Row, column: &str) -> &'a Cell {
        &row.cells[self.index(column)]
    }

    /// Rows whose `column` holds the text `value`.
    pub fn filter<'a>(&'a self, column: &str, value: &'a str) -> impl Iterator<Item = &'a Row> + 'a {
        let i = self.index(column);
        self.rows.iter().filter(move |r| r.cells[i].as_str() == Some(value))
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["schema_version", "experiment", "seed", "row_seed", "status"];
        header.extend(self.columns.iter().map(String::as_str));
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![
                SCHEMA_VERSION.to_string(),
                self.experiment.clone(),
                self.seed.to_string(),
                r.row_seed.to_string(),
                r.status.clone(),
            ];
            rec.extend(r.cells.iter().map(|c| c.to_string()));
            w.write_record(&rec)?;
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }
}

#[derive(Serialize)]
struct RunRecord<'a, P: Serialize> {
    schema_version: u32,
    experiment: &'a str,
    seed: u64,
    tool_version: &'a str,
    complete: bool,
    params: &'a P,
}

/// Writes `run.json` with the resolved parameters.
pub fn write_run_json<P: Serialize>(dir: &Path, res: &SweepResult, params: &P) -> Result<()> {
    let rec = RunRecord {
        schema_version: SCHEMA_VERSION,
        experiment: &res.experiment,
        seed: res.seed,
        tool_version: env!("CARGO_PKG_VERSION"),
        complete: res.is_complete(),
        params,
    };
    let path = dir.join("run.json");
    let mut text = serde_json::to_string_pretty(&rec)?;
    text.push('\n');
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}
