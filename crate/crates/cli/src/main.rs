mod commands;
mod exit;
mod problem;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::exit::{CliError, CliResult};

/// LQG actuator/sensor co-design.
#[derive(Debug, Parser)]
#[command(name = "codesign", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate K, Σ, Φ, Φ̄ and PBH margins at the problem's placement.
    Solve(Common),
    /// Run the multi-start gradient flow and write the best trace.
    Flow(Common),
    /// Enumerate and classify equilibria of a symmetric plant.
    Equilibria(Common),
    /// Estimate Φ by closed-loop Monte Carlo simulation.
    Simulate(Common),
    /// Run the self-check suite.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, hide = true)]
        inject_wrong_gradient: bool,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Problem file (JSON).
    #[arg(long)]
    problem: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the problem's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the problem's number of flow starts.
    #[arg(long)]
    starts: Option<usize>,
}

const THREADS_VAR: &str = "CODESIGN_THREADS";

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{THREADS_VAR} must be a nonnegative integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot configure thread pool: {e}")))
}

fn run(cmd: Command) -> CliResult<()> {
    configure_threads()?;
    let (common, inject) = match &cmd {
        Command::Solve(c) | Command::Flow(c) | Command::Equilibria(c) | Command::Simulate(c) => (c, false),
        Command::Verify { common, inject_wrong_gradient } => (common, *inject_wrong_gradient),
    };
    let out = common.out.as_path();
    let result = std::fs::create_dir_all(out)
        .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", out.display())))
        .and_then(|_| problem::load(&common.problem, common.seed, common.starts))
        .and_then(|p| match &cmd {
            Command::Solve(_) => commands::solve(&p, out),
            Command::Flow(_) => commands::flow(&p, out),
            Command::Equilibria(_) => commands::equilibria(&p, out),
            Command::Simulate(_) => commands::simulate(&p, out),
            Command::Verify { .. } => commands::verify(&p, out, inject),
        });
    if let Err(e) = &result {
        record_error(out, e);
    }
    result
}

fn record_error(out: &Path, e: &CliError) {
    if out.is_dir() {
        let _ = report::write_json(out, "error.json", &report::error(e));
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
