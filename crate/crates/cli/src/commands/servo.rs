//! `phri servo`: run the one-axis servo simulation.

use std::fs;
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use phri_core::bias_model::{BiasParameters, ForceLevel};
use phri_core::experiments::NoisyHumanConfig;
use phri_core::servo::{
    force_control_step, position_control_step, simulate_phase_pair, ControllerParams,
    HumanCoupling, PlantParams, ServoState,
};

use crate::config::{load_json_config, ServoConfig, ServoMode};
use crate::error::{from_core, io_err, CmdError, CmdResult};
use crate::io;

#[derive(Debug, clap::Args)]
pub struct ServoArgs {
    /// Servo configuration JSON; defaults to the force-step setup.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory for series.csv and report.json.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Serialize)]
pub struct ServoReport {
    pub config: ServoConfig,
    pub content_hash: String,
    /// First time (s) after which the estimate stays within 1% of the
    /// command for the rest of the run (force_step mode).
    pub settling_time_s: Option<f64>,
    /// Mean relative tracking error over the last 10% of the run.
    pub steady_error: Option<f64>,
    pub peak_angle_rad: Option<f64>,
    pub final_angle_rad: Option<f64>,
    /// Steady measured forces of the phase pair (N).
    pub r_measured: Option<f64>,
    pub h_measured: Option<f64>,
}

pub fn run(args: &ServoArgs) -> CmdResult<ServoReport> {
    let config = match &args.config {
        Some(path) => load_json_config::<ServoConfig>(path)?,
        None => ServoConfig::default_force_step(),
    };
    config.validate()?;
    fs::create_dir_all(&args.out_dir)
        .map_err(|e| io_err(&format!("creating {}", args.out_dir.display()), e))?;

    let ctrl = controller(&config);
    ctrl.validate().map_err(|e| from_core("controller", e))?;
    let plant_base = PlantParams {
        inertia: config.plant.inertia,
        torque_constant: config.plant.torque_constant,
        viscous_friction: config.plant.viscous_friction,
        external_torque: 0.0,
    };
    plant_base.validate().map_err(|e| from_core("plant", e))?;
    let coupling = HumanCoupling {
        lever_arm: config.coupling.lever_arm,
        stiffness: config.coupling.stiffness,
        damping: config.coupling.damping,
    };
    coupling.validate().map_err(|e| from_core("coupling", e))?;

    let mut report = ServoReport {
        content_hash: config_hash(&config)?,
        config: config.clone(),
        settling_time_s: None,
        steady_error: None,
        peak_angle_rad: None,
        final_angle_rad: None,
        r_measured: None,
        h_measured: None,
    };
    let mut series: Vec<(usize, usize, &str, f64)> = Vec::new();

    match config.mode {
        ServoMode::ForceStep => {
            let cmd = config.torque_cmd.expect("validated");
            let steps = (config.duration_s / ctrl.dt).round() as usize;
            let mut state = ServoState::at_rest();
            let mut estimates = Vec::with_capacity(steps);
            for k in 0..steps {
                let mut tau = coupling.stiffness * state.angle + coupling.damping * state.velocity;
                if let Some(d) = &config.disturbance {
                    if (k as f64) * ctrl.dt >= d.at_s {
                        tau += d.torque;
                    }
                }
                let out = force_control_step(
                    &mut state,
                    &ctrl,
                    &plant_base.with_external_torque(tau),
                    cmd,
                )
                .map_err(|e| from_core("force step", e))?;
                estimates.push(out.reaction_torque);
                if k % config.decimation == 0 {
                    series.push((0, k, "robot", out.reaction_torque / coupling.lever_arm));
                }
            }
            report.settling_time_s = settling_time(&estimates, cmd, 0.01, ctrl.dt);
            report.steady_error = Some(steady_error(&estimates, cmd));
            report.final_angle_rad = Some(state.angle);
        }
        ServoMode::PositionHold => {
            let load = config.load_torque.expect("validated");
            let steps = (config.duration_s / ctrl.dt).round() as usize;
            let mut state = ServoState::at_rest();
            let mut peak: f64 = 0.0;
            for k in 0..steps {
                let out =
                    position_control_step(&mut state, &ctrl, &plant_base.with_external_torque(load))
                        .map_err(|e| from_core("position step", e))?;
                peak = peak.max(state.angle.abs());
                if k % config.decimation == 0 {
                    series.push((0, k, "human", out.reaction_torque / coupling.lever_arm));
                }
            }
            report.peak_angle_rad = Some(peak);
            report.final_angle_rad = Some(state.angle);
        }
        ServoMode::PhasePair => {
            let human_cfg = config.human.expect("validated");
            let params = BiasParameters::new(human_cfg.alpha, human_cfg.beta)
                .map_err(|e| from_core("human parameters", e))?;
            let human = NoisyHumanConfig::new(params, human_cfg.sigma, human_cfg.seed)
                .map_err(|e| from_core("human agent", e))?;
            let force_cmd = ForceLevel::new(config.force_cmd.expect("validated"))
                .map_err(|e| from_core("force_cmd", e))?;
            let mut rng = ChaCha8Rng::seed_from_u64(human_cfg.seed);
            let (r, h) = simulate_phase_pair(
                &ctrl,
                &plant_base,
                &coupling,
                &human,
                &mut rng,
                force_cmd,
                config.phase_seconds.expect("validated"),
                config.steady_window_seconds.expect("validated"),
            )
            .map_err(|e| from_core("phase pair", e))?;
            report.r_measured = Some(r);
            report.h_measured = Some(h);
            // Re-run with logging through the same step functions.
            log_phase_pair(&config, &ctrl, &plant_base, &coupling, &human, &mut series)?;
        }
    }

    write_series(&args.out_dir.join("series.csv"), &series)?;
    io::write_json(&args.out_dir.join("report.json"), &report)?;
    io::print_json(&report)?;
    Ok(report)
}

fn controller(config: &ServoConfig) -> ControllerParams<f64> {
    let c = &config.controller;
    ControllerParams {
        nominal_inertia: c.nominal_inertia,
        nominal_torque_constant: c.nominal_torque_constant,
        force_gain: c.force_gain,
        position_gain: c.position_gain,
        velocity_gain: c.velocity_gain,
        dob_cutoff: c.dob_cutoff,
        diff_cutoff: c.diff_cutoff,
        reaction_cutoff: c.reaction_cutoff,
        observer_friction: c.observer_friction,
        dt: c.dt,
    }
}

/// First time after which |estimate - cmd| stays within `tol * cmd`.
fn settling_time(estimates: &[f64], cmd: f64, tol: f64, dt: f64) -> Option<f64> {
    let band = tol * cmd.abs();
    let mut last_violation = None;
    for (k, &e) in estimates.iter().enumerate() {
        if (e - cmd).abs() > band {
            last_violation = Some(k);
        }
    }
    match last_violation {
        None => Some(0.0),
        Some(k) if k + 1 < estimates.len() => Some((k + 1) as f64 * dt),
        Some(_) => None,
    }
}

fn steady_error(estimates: &[f64], cmd: f64) -> f64 {
    let tail = estimates.len() / 10;
    let window = &estimates[estimates.len() - tail.max(1)..];
    let mean_abs = window.iter().map(|e| (e - cmd).abs()).sum::<f64>() / window.len() as f64;
    mean_abs / cmd.abs().max(f64::MIN_POSITIVE)
}

/// Replays the phase pair step by step for the time-series dump; the
/// measured values come from `simulate_phase_pair` itself.
fn log_phase_pair(
    config: &ServoConfig,
    ctrl: &ControllerParams<f64>,
    plant: &PlantParams<f64>,
    coupling: &HumanCoupling<f64>,
    human: &NoisyHumanConfig<f64>,
    series: &mut Vec<(usize, usize, &'static str, f64)>,
) -> CmdResult<()> {
    use phri_core::experiments::reproduce_noisy;

    let phase_seconds = config.phase_seconds.expect("validated");
    let window = config.steady_window_seconds.expect("validated");
    let steps = (phase_seconds / ctrl.dt).round() as usize;
    let window_steps = (window / ctrl.dt).round() as usize;
    let torque_cmd = config.force_cmd.expect("validated") * coupling.lever_arm;
    let mut rng = ChaCha8Rng::seed_from_u64(config.human.expect("validated").seed);

    let mut state = ServoState::at_rest();
    let mut sum = 0.0;
    for k in 0..steps {
        let tau = coupling.stiffness * state.angle + coupling.damping * state.velocity;
        let out = force_control_step(&mut state, ctrl, &plant.with_external_torque(tau), torque_cmd)
            .map_err(|e| from_core("force phase", e))?;
        if k + window_steps >= steps {
            sum += out.reaction_torque;
        }
        if k % config.decimation == 0 {
            series.push((0, k, "robot", out.reaction_torque / coupling.lever_arm));
        }
    }
    let r = ForceLevel::new(sum / window_steps as f64 / coupling.lever_arm)
        .map_err(|e| from_core("measured force", e))?;
    let applied = reproduce_noisy(human, r, &mut rng).value() * coupling.lever_arm;
    for k in 0..steps {
        let out = position_control_step(&mut state, ctrl, &plant.with_external_torque(applied))
            .map_err(|e| from_core("human phase", e))?;
        if k % config.decimation == 0 {
            series.push((0, steps + k, "human", out.reaction_torque / coupling.lever_arm));
        }
    }
    Ok(())
}

fn write_series(path: &std::path::Path, rows: &[(usize, usize, &str, f64)]) -> CmdResult<()> {
    let mut out = String::from("run,k,phase,force_n\n");
    for (run, k, phase, force) in rows {
        out.push_str(&format!("{run},{k},{phase},{}\n", io::format_float(*force)));
    }
    fs::write(path, out).map_err(|e| io_err(&format!("writing {}", path.display()), e))
}

fn config_hash(config: &ServoConfig) -> CmdResult<String> {
    let bytes = serde_json::to_vec(config)
        .map_err(|e| CmdError::Schema(format!("hashing config: {e}")))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
