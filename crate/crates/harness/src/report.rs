//! The run report and the files written for it.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;
use serde_json::Value;

use crate::config::ScenarioConfig;
use crate::tables::{Column, Table};
use crate::{HarnessError, Mode};

pub const SCHEMA_VERSION: &str = "1.0";

/// One hard check; a failed assertion makes the run exit with status 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    /// First witness on failure, a short summary otherwise.
    pub detail: String,
}

impl Assertion {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.to_string(), passed, detail: detail.into() }
    }

    /// Passes unless `witness` is present.
    pub fn from_witness(name: &str, witness: Option<String>, otherwise: impl Into<String>) -> Self {
        match witness {
            Some(w) => Self::new(name, false, w),
            None => Self::new(name, true, otherwise),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Environment {
    pub package_version: &'static str,
    pub os: &'static str,
    pub arch: &'static str,
    pub threads: usize,
}

impl Environment {
    fn current() -> Self {
        Self {
            package_version: env!("CARGO_PKG_VERSION"),
            os: std::env::consts::OS,
            arch: std::env::consts::ARCH,
            threads: rayon::current_num_threads(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CommandEcho {
    pub mode: &'static str,
    pub config_path: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: &'static str,
    pub command: CommandEcho,
    pub config: ScenarioConfig,
    pub environment: Environment,
    pub wall_time_s: f64,
    /// Per-instance records, in instance order.
    pub instances: Value,
    pub summary: Value,
    pub assertions: Vec<Assertion>,
    pub passed: bool,
}

impl RunReport {
    pub(crate) fn new(
        mode: Mode,
        source: &Path,
        config: &ScenarioConfig,
        instances: Value,
        summary: Value,
        assertions: Vec<Assertion>,
        elapsed: Duration,
    ) -> Self {
        let passed = assertions.iter().all(|a| a.passed);
        Self {
            schema_version: SCHEMA_VERSION,
            command: CommandEcho { mode: mode.name(), config_path: source.to_path_buf() },
            config: config.clone(),
            environment: Environment::current(),
            wall_time_s: elapsed.as_secs_f64(),
            instances,
            summary,
            assertions,
            passed,
        }
    }
}

#[derive(Serialize)]
struct Schema<'a> {
    schema_version: &'static str,
    float_format: &'static str,
    tables: BTreeMap<String, &'a [Column]>,
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Output { path: path.to_path_buf(), source }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| HarnessError::Output { path: path.to_path_buf(), source: std::io::Error::other(e) })?;
    std::fs::write(path, text + "\n").map_err(io_error(path))
}

/// Writes every output file from the calling thread.
pub(crate) fn write_all(dir: &Path, report: &RunReport, tables: &[Table]) -> Result<(), HarnessError> {
    let table_dir = dir.join("tables");
    std::fs::create_dir_all(&table_dir).map_err(io_error(&table_dir))?;
    for table in tables {
        table
            .write(&table_dir)
            .map_err(|source| HarnessError::Table { path: table_dir.join(format!("{}.csv", table.name)), source })?;
    }
    let schema = Schema {
        schema_version: SCHEMA_VERSION,
        float_format: "scientific with 12 fractional digits; empty cells are absent values",
        tables: tables.iter().map(|t| (format!("tables/{}.csv", t.name), t.columns)).collect(),
    };
    write_json(&dir.join("schema.json"), &schema)?;
    write_json(&dir.join("report.json"), report)
}
