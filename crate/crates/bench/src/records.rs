//! Benchmark CSV rows.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use legible_core::maze::Cell;

use crate::error::BenchError;

pub const HEADER: [&str; 18] = [
    "experiment",
    "framework",
    "maze",
    "goals",
    "states",
    "sample_id",
    "start",
    "goal",
    "success",
    "seconds",
    "leg_polmdp",
    "leg_miura_kl",
    "leg_miura_euclid",
    "seed",
    "beta",
    "gamma",
    "eta",
    "notes",
];

pub const GOAL_SCALING: &str = "goal-scaling";
pub const STATE_SCALING: &str = "state-scaling";
pub const POLMDP: &str = "polmdp";
pub const LMDP: &str = "lmdp";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub framework: String,
    pub maze: String,
    pub goals: usize,
    pub states: usize,
    pub sample_id: usize,
    pub start: String,
    pub goal: String,
    pub success: bool,
    pub seconds: f64,
    pub leg_polmdp: Option<f64>,
    pub leg_miura_kl: Option<f64>,
    pub leg_miura_euclid: Option<f64>,
    pub seed: u64,
    pub beta: f64,
    pub gamma: f64,
    pub eta: f64,
    pub notes: String,
}

impl ResultRow {
    /// Configuration key: rows sharing it are compared against each other.
    pub fn config_key(&self) -> String {
        format!("{}/{}/{}", self.experiment, self.maze, self.goals)
    }
}

pub fn format_cell(cell: Cell) -> String {
    format!("{}:{}", cell.row, cell.col)
}

/// Row writer that flushes after every record.
pub struct RowSink<W: Write> {
    writer: csv::Writer<W>,
}

impl<W: Write> RowSink<W> {
    pub fn new(inner: W) -> Result<Self, BenchError> {
        let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(inner);
        writer.write_record(HEADER)?;
        writer.flush().map_err(|e| BenchError::io("<csv sink>", e))?;
        Ok(Self { writer })
    }

    pub fn write(&mut self, row: &ResultRow) -> Result<(), BenchError> {
        self.writer.serialize(row)?;
        self.writer.flush().map_err(|e| BenchError::io("<csv sink>", e))
    }

    pub fn into_inner(self) -> Result<W, BenchError> {
        self.writer
            .into_inner()
            .map_err(|e| BenchError::io("<csv sink>", e.into_error()))
    }
}

impl RowSink<File> {
    pub fn create(path: &Path) -> Result<Self, BenchError> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
        }
        let file = File::create(path).map_err(|e| BenchError::io(path, e))?;
        Self::new(file)
    }
}

pub fn read_rows<R: Read>(reader: R) -> Result<Vec<ResultRow>, BenchError> {
    let mut reader = csv::Reader::from_reader(reader);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != HEADER {
        return Err(BenchError::Config(format!("unexpected results header: {}", header.join(","))));
    }
    reader
        .deserialize()
        .map(|r| r.map_err(BenchError::from))
        .collect()
}

pub fn read_rows_from(path: &Path) -> Result<Vec<ResultRow>, BenchError> {
    let file = File::open(path).map_err(|e| BenchError::io(path, e))?;
    read_rows(file)
}
