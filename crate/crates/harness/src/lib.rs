//! Scenario runner for the torsion laboratory: reads a TOML scenario, runs one
//! instance or a sweep of instances in parallel and writes `report.json`,
//! `tables/*.csv` and `schema.json`.

pub mod config;
mod experiments;
pub mod report;
pub mod tables;

use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

pub use config::{ConfigError, ExperimentKind, ScenarioConfig};
pub use report::{Assertion, RunReport};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    /// An instance could not be evaluated at all.
    #[error("instance {id}: {message}")]
    Instance { id: String, message: String },
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
    #[error("cannot write table {path}: {source}")]
    Table { path: PathBuf, source: csv::Error },
}

impl HarnessError {
    /// 2 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::Config(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// The unswept scenario only.
    Run,
    /// One instance per sweep value.
    Sweep,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Run => "run",
            Mode::Sweep => "sweep",
        }
    }
}

/// Command-line values that take precedence over the scenario file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

const DEFAULT_OUTPUT: &str = "torsionlab-out";

#[derive(Debug)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub report: RunReport,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.report.passed
    }

    pub fn first_failure(&self) -> Option<&Assertion> {
        self.report.assertions.iter().find(|a| !a.passed)
    }
}

/// Loads and validates a scenario with the overrides applied.
pub fn prepare(path: &Path, overrides: &Overrides) -> Result<ScenarioConfig, ConfigError> {
    let mut config = config::load(path)?;
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    if let Some(out) = &overrides.out {
        config.output_dir = Some(out.clone());
    }
    Ok(config)
}

pub fn execute(mode: Mode, path: &Path, overrides: &Overrides) -> Result<RunOutcome, HarnessError> {
    let config = prepare(path, overrides)?;
    execute_config(mode, &config, path)
}

/// Runs an already validated scenario; `source` is only echoed in the report.
pub fn execute_config(mode: Mode, config: &ScenarioConfig, source: &Path) -> Result<RunOutcome, HarnessError> {
    if mode == Mode::Sweep && config.sweep.is_none() {
        return Err(ConfigError::Invalid {
            path: "sweep".into(),
            message: "the sweep command needs a [sweep] table".into(),
        }
        .into());
    }
    let started = Instant::now();
    let output = experiments::run(config, mode == Mode::Sweep)?;
    let out_dir = config.output_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT));
    let report =
        RunReport::new(mode, source, config, output.instances, output.summary, output.assertions, started.elapsed());
    report::write_all(&out_dir, &report, &output.tables)?;
    Ok(RunOutcome { out_dir, report })
}
