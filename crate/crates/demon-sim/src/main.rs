//! Command-line front end for the qutrit feedback-loop simulator.
//!
//! Five subcommands turn one JSON run configuration into CSV/JSON files
//! (and optional gnuplot scripts): `dynamics`, `fluctuation`, `bounds`,
//! `phase-diagram`, `eta-star`. Every command is deterministic — identical
//! configuration yields byte-identical output files regardless of thread
//! count.

mod commands;
mod config;
mod output;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Failure classes, each with its contract exit code: model-invariant
/// violations exit 2, configuration problems exit 3, IO problems exit 4.
#[derive(Debug)]
pub enum CliError {
    Invariant(String),
    Config(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Invariant(_) => 2,
            CliError::Config(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Invariant(m) | CliError::Config(m) | CliError::Io(m) => m,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "demon-sim",
    version,
    about = "Simulates an autonomous measurement-feedback loop on a qutrit: \
             level dynamics, fluctuation identities, extraction bounds, phase \
             diagrams, and characteristic-function zeros."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Conditional level probabilities P(j|i) per feedback-block count.
    Dynamics(CommonArgs),
    /// Characteristic function at beta against the efficacy, per block count.
    Fluctuation(CommonArgs),
    /// Energy change against its efficacy and record-entropy lower bounds.
    Bounds(CommonArgs),
    /// Extraction/injection classification over asymptotic populations.
    PhaseDiagram(CommonArgs),
    /// Nontrivial zero of the asymptotic characteristic function.
    EtaStar(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the configuration's `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also emit gnuplot scripts next to the CSV files.
    #[arg(long)]
    plots: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 3,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (args, run): (&CommonArgs, fn(&config::RunConfig) -> Result<(), CliError>) =
        match &cli.command {
            Command::Dynamics(a) => (a, commands::cmd_dynamics),
            Command::Fluctuation(a) => (a, commands::cmd_fluctuation),
            Command::Bounds(a) => (a, commands::cmd_bounds),
            Command::PhaseDiagram(a) => (a, commands::cmd_phase_diagram),
            Command::EtaStar(a) => (a, commands::cmd_eta_star),
        };
    let outcome = config::load(&args.config, args.out.as_deref(), args.plots)
        .and_then(|run_config| run(&run_config));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
