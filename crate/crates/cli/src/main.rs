//! `qnoise`: verification sweeps and training experiments.
//!
//! Exit status: 0 all checks passed, 1 a verification check failed,
//! 2 usage or configuration error, 3 infeasible experiment.

mod config;
mod error;
mod interval;
mod invariance;
mod lemmas;
mod output;
mod train;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{load_section, Common};
use crate::error::{RunError, EXIT_PASS, EXIT_VERIFICATION_FAILED};

#[derive(Debug, Parser)]
#[command(name = "qnoise", version, about = "Noise-robustness checks for quantum binary classifiers")]
struct Cli {
    /// Config file: `key = value` lines grouped in one `[section]` per
    /// subcommand. Flags override file values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check that noise on wires 2..n leaves the first-qubit readout unchanged.
    VerifyTheorem1(invariance::Options),
    /// Check the shrinkage interval of the corrupted margin over a noise grid.
    VerifyTheorem2(interval::Options),
    /// Check the conditional-margin identities and the quarter-sum inequality.
    VerifyLemmas(lemmas::Options),
    /// Fit clean, noisy and regularized classifiers on synthetic data.
    Train(train::Options),
}

impl Command {
    fn section(&self) -> &'static str {
        match self {
            Command::VerifyTheorem1(_) => "verify-theorem1",
            Command::VerifyTheorem2(_) => "verify-theorem2",
            Command::VerifyLemmas(_) => "verify-lemmas",
            Command::Train(_) => "train",
        }
    }
}

fn init_threads(threads: Option<usize>) -> Result<(), RunError> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| RunError::Runtime(format!("cannot start thread pool: {e}")))?;
    }
    Ok(())
}

/// Resolves options, runs the subcommand, writes its outputs and returns the
/// exit status. All validation happens before any computation.
fn run(cli: Cli) -> Result<i32, RunError> {
    let file = cli.config.as_deref();
    let section = cli.command.section();
    macro_rules! dispatch {
        ($module:ident, $flags:expr) => {{
            let opts = $flags.overlay(load_section(file, section)?);
            let common = Common::resolve(opts.common(), file, section)?;
            let config = $module::Config::resolve(opts, common.seed)?;
            init_threads(common.threads)?;
            let outcome = $module::run(&config)?;
            finish(section, &common, &config, outcome)
        }};
    }
    match cli.command {
        Command::VerifyTheorem1(flags) => dispatch!(invariance, flags),
        Command::VerifyTheorem2(flags) => dispatch!(interval, flags),
        Command::VerifyLemmas(flags) => dispatch!(lemmas, flags),
        Command::Train(flags) => dispatch!(train, flags),
    }
}

fn finish(
    section: &str,
    common: &Common,
    config: &impl serde::Serialize,
    outcome: output::Outcome,
) -> Result<i32, RunError> {
    let code = if outcome.passed {
        EXIT_PASS
    } else {
        EXIT_VERIFICATION_FAILED
    };
    output::write(section, common, config, &outcome, code)?;
    let verdict = if outcome.passed { "passed" } else { "FAILED" };
    println!(
        "{section}: {verdict}; report written to {}",
        Path::new(&common.out).join("report.json").display()
    );
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
