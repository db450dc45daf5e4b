//! `phri stability`: per-level stability table and unstable region from a
//! trial CSV.

use std::path::PathBuf;

use serde::Serialize;

use phri_core::fitting;
use phri_core::stability::{estimate_unstable_region, group_samples, UnstableRegion};

use crate::analysis::{evaluation_samples, level_rows, FitSummary, LevelRow};
use crate::error::{from_core, CmdError, CmdResult};
use crate::io;

#[derive(Debug, clap::Args)]
pub struct StabilityArgs {
    /// Trial CSV (header: trial,stimulus_n,response_n).
    #[arg(long)]
    pub input: PathBuf,
    /// Significance level of the per-level test.
    #[arg(long, default_value_t = phri_core::stats::DEFAULT_SIGNIFICANCE)]
    pub significance: f64,
    /// Write the report JSON here as well as to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct StabilityReport {
    pub fit: FitSummary,
    pub significance: f64,
    pub levels: Vec<LevelRow>,
    pub unstable_region: Option<UnstableRegion<f64>>,
}

pub fn run(args: &StabilityArgs) -> CmdResult<StabilityReport> {
    if !(args.significance > 0.0 && args.significance < 1.0) {
        return Err(CmdError::Schema("significance must lie in (0, 1)".into()));
    }
    let trials = io::read_trials(&args.input)?;
    let fit = fitting::fit_power_law(&trials)
        .map_err(|e| from_core(&format!("fitting {}", args.input.display()), e))?;
    if !fit.converged {
        return Err(CmdError::Degenerate(format!(
            "fit of {} did not converge; cannot normalize",
            args.input.display()
        )));
    }
    let gamma = fit.params.implicit_equilibrium();
    let samples = evaluation_samples(&trials, gamma, 0);
    let levels = group_samples(&samples);
    let rows = level_rows(&levels, args.significance)?;
    let region = estimate_unstable_region(&levels, args.significance)
        .map_err(|e| from_core("estimating the unstable region", e))?;

    let report = StabilityReport {
        fit: FitSummary::from_fit(&fit),
        significance: args.significance,
        levels: rows,
        unstable_region: region,
    };
    if let Some(path) = &args.out {
        io::write_json(path, &report)?;
    }
    io::print_json(&report)?;
    Ok(report)
}
