use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nematic::cli::{cmd_analyze, cmd_simulate, cmd_stationary, cmd_sweep, SweepAxis};

/// Nematic liquid-crystal flow simulator and equilibrium analyzer.
#[derive(Parser)]
#[command(name = "nematic", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the coupled system and write trajectory artifacts.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides config and OUT_DIR).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the stationary problem, probe the kernel, evaluate criteria.
    Stationary {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render theorem verdicts and plot data from a completed run directory.
    Analyze {
        run_dir: PathBuf,
    },
    /// Run independent simulations across an axis (L, delta, or seed).
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Sweep axis: L, delta, or seed.
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated axis values.
        #[arg(long)]
        values: String,
        /// Bounded parallelism across runs.
        #[arg(long, default_value_t = 2)]
        jobs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate { config, out } => cmd_simulate(config, out.as_deref(), cli.quiet),
        Command::Stationary { config, out } => cmd_stationary(config, out.as_deref(), cli.quiet),
        Command::Analyze { run_dir } => cmd_analyze(run_dir, cli.quiet),
        Command::Sweep { config, axis, values, jobs, out } => {
            cmd_sweep(config, *axis, values, *jobs, out.as_deref(), cli.quiet)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
