//! `phri report`: human-readable summary of an experiment report.

use std::fs;
use std::path::PathBuf;

use serde_json::Value;

use crate::error::{CmdError, CmdResult};

#[derive(Debug, clap::Args)]
pub struct ReportArgs {
    /// Directory holding report.json from `phri experiment`.
    #[arg(long)]
    pub in_dir: PathBuf,
}

pub fn run(args: &ReportArgs) -> CmdResult<()> {
    let path = args.in_dir.join("report.json");
    let text = fs::read_to_string(&path)
        .map_err(|e| CmdError::Schema(format!("reading {}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text)
        .map_err(|e| CmdError::Schema(format!("parsing {}: {e}", path.display())))?;

    let agents = v["agents"].as_array().map(|a| a.len()).unwrap_or(0);
    println!("agents: {agents}  (outliers: {})", v["outliers"]);
    if let Some(fit) = v.get("pooled_normalized_fit") {
        println!(
            "pooled normalized fit: alpha = {}, beta = {}, gamma = {}, rmse = {}",
            fit["alpha"], fit["beta"], fit["gamma"], fit["rmse"]
        );
    }
    match v.get("unstable_region") {
        Some(Value::Null) | None => println!("unstable region: none detected"),
        Some(region) => println!(
            "unstable region: {} < r/gamma < {}  (error radius {})",
            region["lower"], region["upper"], region["error_radius"]
        ),
    }
    if let Some(div) = v.get("divergence") {
        println!(
            "divergence: {} convergent, {} divergent, overall rate {} %",
            div["total_convergent"], div["total_divergent"], div["overall_rate"]
        );
    }
    if let Some(rate) = v.get("asymptotic_convergence_rate") {
        println!("asymptotic convergence rate: {rate} %");
    }
    if let Some(Value::Array(groups)) = v.get("groups") {
        println!("group  mean_e_r0   mean_e_h_final  direction  p        significant");
        for g in groups {
            println!(
                "{:5}  {:<10.4} {:<15.4} {:<9} {:<8} {}",
                g["group"].as_str().unwrap_or("?"),
                g["mean_initial_error"].as_f64().unwrap_or(f64::NAN),
                g["mean_final_error"].as_f64().unwrap_or(f64::NAN),
                g["direction"].as_str().unwrap_or("?"),
                g["p"]
                    .as_f64()
                    .map(|p| format!("{p:.4}"))
                    .unwrap_or_else(|| "-".into()),
                g["significant"]
            );
        }
    }
    Ok(())
}
