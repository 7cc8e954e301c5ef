use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod manifest;

/// Car-following velocity control: extract events, fit headways, train and evaluate.
#[derive(Debug, Parser)]
#[command(name = "carfollow", version)]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Run configuration file (`section.key = value` lines).
    #[arg(long, global = true, env = "CARFOLLOW_CONFIG")]
    config: Option<PathBuf>,

    /// Seed for splits, initialization, noise and sampling (overrides run.seed).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (overrides run.out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Events file (overrides data.events).
    #[arg(long, global = true)]
    events: Option<PathBuf>,

    /// Any other config key, e.g. `--set train.episodes=10`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a trajectory table and write the car-following events it contains.
    Extract {
        /// Trajectory table (overrides data.trajectories).
        #[arg(long)]
        trajectories: Option<PathBuf>,
    },
    /// Fit the lognormal time-headway distribution of an events file.
    FitHeadway,
    /// Split events into train/test and train the controller.
    Train,
    /// Roll a checkpoint over an events file and write comparison tables.
    Evaluate {
        /// Checkpoint directory written by `train`.
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Run the embedded numeric oracles.
    Selftest,
    /// Write a synthetic trajectory table in the default column layout.
    Synth {
        /// Number of leader/follower pairs.
        #[arg(long, default_value_t = 100)]
        pairs: usize,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
