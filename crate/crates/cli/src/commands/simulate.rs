//! `phri simulate`: run the deterministic interaction map.

use std::path::PathBuf;

use phri_core::bias_model::{BiasParameters, ForceLevel};
use phri_core::dynamics;

use crate::error::{from_core, CmdResult};
use crate::io;

#[derive(Debug, clap::Args)]
#[command(allow_negative_numbers = true)]
pub struct SimulateArgs {
    /// Reproduction gain (> 0).
    #[arg(long)]
    pub alpha: f64,
    /// Reproduction exponent (< 0).
    #[arg(long)]
    pub beta: f64,
    /// Initial robot force (> 0).
    #[arg(long)]
    pub r0: f64,
    /// Robot/human phase pairs to simulate.
    #[arg(long, default_value_t = 20)]
    pub phases: usize,
    /// Disable the reproduction bias (marginally stable baseline).
    #[arg(long)]
    pub no_bias: bool,
    /// Divide emitted forces by the implicit equilibrium point.
    #[arg(long)]
    pub normalize: bool,
    /// Trace CSV output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &SimulateArgs) -> CmdResult<()> {
    let r0 = ForceLevel::new(args.r0).map_err(|e| from_core("r0", e))?;
    let (trace, scale) = if args.no_bias {
        let trace = dynamics::simulate_unbiased(r0, args.phases)
            .map_err(|e| from_core("simulate", e))?;
        (trace, 1.0)
    } else {
        let params =
            BiasParameters::new(args.alpha, args.beta).map_err(|e| from_core("parameters", e))?;
        let gamma = params.implicit_equilibrium().value();
        let trace =
            dynamics::simulate(&params, r0, args.phases).map_err(|e| from_core("simulate", e))?;
        (trace, if args.normalize { gamma } else { 1.0 })
    };

    let forces = io::trace_forces(&trace, scale);
    println!(
        "phases = {}  initial = {:.6}  final = {:.6}",
        args.phases,
        forces[0],
        forces[forces.len() - 1]
    );
    if let Some(path) = &args.out {
        io::write_traces(path, &[(0, forces)])?;
        println!("trace written to {}", path.display());
    }
    Ok(())
}
