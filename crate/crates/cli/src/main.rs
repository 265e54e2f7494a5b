use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod manifest;

#[derive(Debug, Parser)]
#[command(
    name = "irs-radar",
    version,
    about = "FMCW radar simulator with IRS-equipped targets and mutual interference"
)]
struct Cli {
    /// Worker threads for Monte-Carlo runs. Results do not depend on this value.
    #[arg(long, global = true, env = "IRS_RADAR_THREADS")]
    threads: Option<usize>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize one frame and dump it with its range-Doppler map and detections.
    Simulate(SimulateArgs),
    /// Detection probability against reflection gain, with the non-IRS baseline.
    Sweep(SweepArgs),
    /// Signal-to-interference ratio against reflection gain.
    Sir(SirArgs),
    /// Effective RCS of an active surface against reflection gain.
    Rcs(RcsArgs),
    /// Parse and check a scenario, printing derived metrics and diagnostics.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Master seed; overrides the scenario's `master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FrameFormat {
    Csv,
    Raw,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Reflection gain in dB for an active surface; defaults to the scenario's value.
    #[arg(long)]
    gamma_db: Option<f64>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FrameFormat,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Reflection gain grid in dB, `start:stop:step`.
    #[arg(long, default_value = "0:40:1")]
    gamma: String,
    /// Trials per grid point.
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    /// Shorthand for `--trials 200`.
    #[arg(long, conflicts_with = "trials")]
    fast: bool,
    /// Skip the non-IRS baseline curve.
    #[arg(long)]
    no_baseline: bool,
    /// Also write a matplotlib script that plots the curves.
    #[arg(long)]
    plot_script: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SirModelArg {
    Rcs,
    Printed,
}

#[derive(Debug, Args)]
struct SirArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "0:40:1")]
    gamma: String,
    #[arg(long, value_enum, default_value = "rcs")]
    model: SirModelArg,
    #[arg(long)]
    plot_script: bool,
}

#[derive(Debug, Args)]
struct RcsArgs {
    /// Element count. Perfect squares become square panels, anything else a single row.
    #[arg(long, default_value_t = 65_536)]
    elements: usize,
    #[arg(long, default_value = "0:40:1")]
    gamma: String,
    #[arg(long, default_value_t = 77e9)]
    carrier_hz: f64,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long)]
    plot_script: bool,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    scenario: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size worker pool: {e}");
        }
    }

    let argv: Vec<String> = std::env::args().collect();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&a, &argv),
        Command::Sweep(a) => commands::sweep(&a, &argv),
        Command::Sir(a) => commands::sir(&a, &argv),
        Command::Rcs(a) => commands::rcs(&a, &argv),
        Command::Validate(a) => commands::validate(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
