use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use torsion_harness::{execute_config, prepare, HarnessError, Mode, Overrides};

/// Torsion-problem experiments: integral identities, stability sweeps and shape flows.
#[derive(Debug, Parser)]
#[command(name = "torsionlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory, overriding `output_dir` in the scenario.
    #[arg(long, global = true, env = "TORSIONLAB_OUT")]
    out: Option<PathBuf>,
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Random seed, overriding `seed` in the scenario.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the scenario once, ignoring any sweep.
    Run { config: PathBuf },
    /// Run one instance per sweep value.
    Sweep { config: PathBuf },
    /// Parse and validate the scenario without running it.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: cannot start {threads} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    let overrides = Overrides { out: cli.out, seed: cli.seed };
    let (mode, path) = match &cli.command {
        Command::Run { config } => (Mode::Run, config),
        Command::Sweep { config } => (Mode::Sweep, config),
        Command::Validate { config } => {
            return match prepare(config, &overrides) {
                Ok(c) => {
                    println!("{}: valid {} scenario", config.display(), c.experiment.name());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e.into()),
            };
        }
    };
    let result =
        prepare(path, &overrides).map_err(HarnessError::from).and_then(|config| execute_config(mode, &config, path));
    match result {
        Ok(outcome) => {
            for a in &outcome.report.assertions {
                println!("{} {}: {}", if a.passed { "ok  " } else { "FAIL" }, a.name, a.detail);
            }
            println!("wrote {}", outcome.out_dir.display());
            match outcome.first_failure() {
                None => ExitCode::SUCCESS,
                Some(a) => {
                    eprintln!("error: assertion {} failed: {}", a.name, a.detail);
                    ExitCode::from(1)
                }
            }
        }
        Err(e) => fail(&e),
    }
}

fn fail(e: &HarnessError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code())
}
