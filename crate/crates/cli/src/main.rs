use std::process::ExitCode;

use clap::{Parser, Subcommand};

use phri_cli::commands::{experiment, fit, report, servo, simulate, stability};
use phri_cli::error::CmdError;

/// Simulation and analysis pipeline for discrete-event human-robot force
/// interaction.
#[derive(Parser)]
#[command(name = "phri", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the power-law reproduction model to a trial CSV.
    Fit(fit::FitArgs),
    /// Run the deterministic interaction map.
    Simulate(simulate::SimulateArgs),
    /// Per-level stability table and unstable region from a trial CSV.
    Stability(stability::StabilityArgs),
    /// Full synthetic experiment pipeline.
    Experiment(experiment::ExperimentArgs),
    /// One-axis servo simulation.
    Servo(servo::ServoArgs),
    /// Summarize an experiment report directory.
    Report(report::ReportArgs),
}

fn run(cli: &Cli) -> Result<u8, CmdError> {
    match &cli.command {
        Command::Fit(args) => {
            let summary = fit::run(args)?;
            Ok(if summary.converged { 0 } else { 2 })
        }
        Command::Simulate(args) => simulate::run(args).map(|()| 0),
        Command::Stability(args) => stability::run(args).map(|_| 0),
        Command::Experiment(args) => experiment::run(args).map(|_| 0),
        Command::Servo(args) => servo::run(args).map(|_| 0),
        Command::Report(args) => report::run(args).map(|()| 0),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
