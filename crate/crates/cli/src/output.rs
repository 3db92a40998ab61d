//! Report assembly: one JSON document and one flat CSV per run.

use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Common;
use crate::error::RunError;

/// Fixed 17-significant-digit rendering used for every CSV real.
pub fn real(x: f64) -> String {
    qnoise::dataset_io::format_real(x)
}

/// Rows of `sweep.csv`, in the order they are written.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self {
            header: header.iter().map(|h| h.as_ref().to_owned()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// What a subcommand hands back for writing.
pub struct Outcome {
    pub passed: bool,
    pub summary: Value,
    pub table: Table,
    /// Extra files written next to the report, as (name, contents).
    pub artifacts: Vec<(&'static str, String)>,
}

/// Writes `report.json`, `sweep.csv` and any artifacts into `common.out`.
pub fn write(
    subcommand: &str,
    common: &Common,
    config: &impl Serialize,
    outcome: &Outcome,
    exit_code: i32,
) -> Result<(), RunError> {
    let report = json!({
        "tool": "qnoise",
        "version": qnoise::VERSION,
        "subcommand": subcommand,
        "seed": common.seed,
        "config": config,
        "passed": outcome.passed,
        "exit_code": exit_code,
        "summary": outcome.summary,
    });
    let dir: &Path = &common.out;
    fs::create_dir_all(dir)?;
    let mut text = serde_json::to_string_pretty(&report)
        .map_err(|e| RunError::Runtime(format!("cannot serialize report: {e}")))?;
    text.push('\n');
    fs::write(dir.join("report.json"), text)?;
    fs::write(dir.join("sweep.csv"), outcome.table.render())?;
    for (name, contents) in &outcome.artifacts {
        fs::write(dir.join(name), contents)?;
    }
    Ok(())
}
