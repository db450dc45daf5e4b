//! `phri fit`: power-law fit of a trial CSV.

use std::path::{Path, PathBuf};

use phri_core::fitting;

use crate::analysis::FitSummary;
use crate::error::{from_core, CmdResult};
use crate::io;

#[derive(Debug, clap::Args)]
pub struct FitArgs {
    /// Trial CSV (header: trial,stimulus_n,response_n).
    #[arg(long)]
    pub input: PathBuf,
    /// Write the fit JSON here as well as to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Returns the fit summary; the caller maps `converged = false` to exit
/// code 2 after the output has been written.
pub fn run(args: &FitArgs) -> CmdResult<FitSummary> {
    let trials = io::read_trials(&args.input)?;
    let fit = fitting::fit_power_law(&trials)
        .map_err(|e| from_core(&format!("fitting {}", args.input.display()), e))?;
    let summary = FitSummary::from_fit(&fit);
    emit(&summary, args.out.as_deref())?;
    Ok(summary)
}

fn emit(summary: &FitSummary, out: Option<&Path>) -> CmdResult<()> {
    if let Some(path) = out {
        io::write_json(path, summary)?;
    }
    println!(
        "alpha = {:.6}  beta = {:.6}  gamma = {:.6}  rmse = {:.6}  trials = {}  converged = {}",
        summary.alpha, summary.beta, summary.gamma, summary.rmse, summary.n_trials, summary.converged
    );
    io::print_json(summary)
}
