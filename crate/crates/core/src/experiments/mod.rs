//! Experiment runners producing CSV tables.
//!
//! Each table starts with `#` comment lines: the experiment name, every
//! resolved config key (seed included) and free-form notes on how the data
//! were generated. Numbers are written with `{:e}`, the shortest
//! round-trip representation, so identical inputs give identical bytes.

mod los_figures;
mod nlos_figures;
mod verify;

use crate::config::ExperimentConfig;
use crate::error::{CapaError, Result};
use std::fmt::Write as _;
use std::str::FromStr;

pub use los_figures::{fig2a, fig2b, fig3a, fig3b};
pub use nlos_figures::{fig4a, fig4b, sample_scatterers};
pub use verify::verify;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Fig2a,
    Fig2b,
    Fig3a,
    Fig3b,
    Fig4a,
    Fig4b,
    Verify,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Fig2a,
        Experiment::Fig2b,
        Experiment::Fig3a,
        Experiment::Fig3b,
        Experiment::Fig4a,
        Experiment::Fig4b,
        Experiment::Verify,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Fig2a => "fig2a",
            Experiment::Fig2b => "fig2b",
            Experiment::Fig3a => "fig3a",
            Experiment::Fig3b => "fig3b",
            Experiment::Fig4a => "fig4a",
            Experiment::Fig4b => "fig4b",
            Experiment::Verify => "verify",
        }
    }
}

impl FromStr for Experiment {
    type Err = CapaError;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| CapaError::Config {
            line: 0,
            message: format!(
                "unknown experiment '{s}' (expected one of {})",
                Experiment::ALL.map(|e| e.name()).join(", ")
            ),
        })
    }
}

/// Formats a float for CSV output.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}

/// One CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    /// File name without directory.
    pub file_name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub notes: Vec<String>,
}

impl CsvTable {
    pub fn new(file_name: impl Into<String>, columns: Vec<&'static str>) -> Self {
        CsvTable { file_name: file_name.into(), columns, rows: Vec::new(), notes: Vec::new() }
    }

    pub fn push_numbers(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|&x| fmt_f64(x)).collect());
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    /// Index of a column by name.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    pub fn render(&self, experiment: Experiment, cfg: &ExperimentConfig) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# experiment = {}", experiment.name());
        for line in cfg.echo_lines() {
            // The output directory does not affect the data; leaving it out keeps
            // files from different directories byte-comparable.
            if !line.starts_with("output ") {
                let _ = writeln!(out, "# {line}");
            }
        }
        for note in &self.notes {
            let _ = writeln!(out, "# note: {note}");
        }
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

/// Tables produced by one experiment. `failures` is non-empty when a
/// verification check did not meet its tolerance.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentOutput {
    pub tables: Vec<CsvTable>,
    pub failures: Vec<String>,
}

impl From<CsvTable> for ExperimentOutput {
    fn from(t: CsvTable) -> Self {
        ExperimentOutput { tables: vec![t], failures: Vec::new() }
    }
}

pub fn run_experiment(experiment: Experiment, cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    Ok(match experiment {
        Experiment::Fig2a => fig2a(cfg)?.into(),
        Experiment::Fig2b => fig2b(cfg)?.into(),
        Experiment::Fig3a => fig3a(cfg)?.into(),
        Experiment::Fig3b => fig3b(cfg)?.into(),
        Experiment::Fig4a => fig4a(cfg)?.into(),
        Experiment::Fig4b => fig4b(cfg)?.into(),
        Experiment::Verify => verify(cfg)?,
    })
}

/// `n` log-spaced points from `lo` to `hi`, both ends exact.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| match i {
            0 => lo,
            _ if i + 1 == n => hi,
            _ => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

/// `n` evenly spaced points from `lo` to `hi`, both ends exact.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| crate::selection::grid_coordinate(lo, hi, i, n)).collect()
}

/// Side lengths of a frame with area `area` and the aspect ratio of the
/// configured array.
fn scaled_frame(cfg: &ExperimentConfig, area: f64) -> Result<crate::geometry::ArrayFrame> {
    let lx = (area * cfg.lx / cfg.lz).sqrt();
    crate::geometry::ArrayFrame::new(lx, area / lx)
}
