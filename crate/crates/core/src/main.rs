use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use niche_core::cli::{run, RunContext, EXIT_OK, EXIT_VALIDATION};
use niche_core::config::{ExperimentConfig, RawConfig, Task};

/// Nonlocal KPP niche experiments.
#[derive(Parser, Debug)]
#[command(name = "niche", version)]
struct Args {
    #[command(subcommand)]
    task: Command,
    /// `key = value` configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for parallel sub-solves.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Overrides the `seed` key.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Principal eigenvalue for each `c`.
    Eig,
    /// Steady state at `c`.
    Steady,
    /// Time evolution from a bump.
    Evolve,
    /// Critical speeds from the sign of λ_p(c).
    Speeds,
    /// Closed-form speed and eigenvalue bounds.
    Bounds,
    /// Seeded property checks.
    Verify,
}

impl From<Command> for Task {
    fn from(c: Command) -> Task {
        match c {
            Command::Eig => Task::Eig,
            Command::Steady => Task::Steady,
            Command::Evolve => Task::Evolve,
            Command::Speeds => Task::Speeds,
            Command::Bounds => Task::Bounds,
            Command::Verify => Task::Verify,
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let raw = match &args.config {
        Some(p) => RawConfig::load(p),
        None => Ok(RawConfig::default()),
    };
    let cfg = raw.and_then(|raw| ExperimentConfig::resolve(&raw, Some(args.task.into())));
    let cfg = match cfg {
        Ok(c) => match args.seed {
            Some(s) => c.with_seed(s),
            None => c,
        },
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_VALIDATION as u8);
        }
    };
    let ctx = RunContext {
        out: args.out,
        workers: args.workers,
    };
    match run(&cfg, &ctx) {
        Ok(_) => ExitCode::from(EXIT_OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
