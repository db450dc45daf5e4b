//! Run configurations: schema-versioned JSON with unknown keys rejected.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CmdError, CmdResult};

pub const SCHEMA_VERSION: u32 = 1;

fn default_significance() -> f64 {
    phri_core::stats::DEFAULT_SIGNIFICANCE
}

fn default_divergence_bins() -> DivergenceBins {
    DivergenceBins {
        min: 0.5,
        max: 1.5,
        count: 10,
    }
}

/// Full experiment pipeline configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// Master seed; every random stream derives from it.
    pub seed: u64,
    pub cohort: CohortConfig,
    pub reproduction: ReproductionProtocol,
    pub interaction: InteractionProtocol,
    #[serde(default = "default_significance")]
    pub significance: f64,
    #[serde(default = "default_divergence_bins")]
    pub divergence: DivergenceBins,
}

/// Synthetic cohort: equilibrium points spread log-normally, exponents
/// normally, around the cohort centers.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortConfig {
    pub agents: usize,
    /// Median equilibrium point of the cohort (force units).
    pub gamma_location: f64,
    /// Log-scale SD of the equilibrium points.
    pub gamma_log_sd: f64,
    pub beta_mean: f64,
    pub beta_sd: f64,
    /// Lognormal reproduction noise of every agent.
    pub noise_sigma: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReproductionProtocol {
    pub force_levels: Vec<f64>,
    pub repetitions: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionProtocol {
    /// Robot/human phase pairs per interaction; the final human force is
    /// `h[phases]`.
    pub phases: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DivergenceBins {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl ExperimentConfig {
    /// Hand-finger-like defaults: 12 agents, levels 1..10 N, 5 repetitions,
    /// 20 phase pairs, sigma 0.2.
    pub fn default_hand_finger() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: 1,
            cohort: CohortConfig {
                agents: 12,
                gamma_location: 2.133,
                gamma_log_sd: 0.4,
                beta_mean: -0.625,
                beta_sd: 0.05,
                noise_sigma: 0.2,
            },
            reproduction: ReproductionProtocol {
                force_levels: (1..=10).map(|k| k as f64).collect(),
                repetitions: 5,
            },
            interaction: InteractionProtocol { phases: 20 },
            significance: default_significance(),
            divergence: default_divergence_bins(),
        }
    }

    pub fn validate(&self) -> CmdResult<()> {
        let schema = |msg: String| Err(CmdError::Schema(msg));
        if self.schema_version != SCHEMA_VERSION {
            return schema(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.cohort.agents < 3 {
            return schema("cohort.agents must be at least 3 (outlier rule)".into());
        }
        if !(self.cohort.gamma_location > 0.0 && self.cohort.gamma_location.is_finite()) {
            return schema("cohort.gamma_location must be positive".into());
        }
        if !(self.cohort.gamma_log_sd >= 0.0 && self.cohort.gamma_log_sd.is_finite()) {
            return schema("cohort.gamma_log_sd must be non-negative".into());
        }
        if !(self.cohort.beta_mean < 0.0 && self.cohort.beta_mean.is_finite()) {
            return schema("cohort.beta_mean must be negative".into());
        }
        if !(self.cohort.beta_sd >= 0.0 && self.cohort.beta_sd.is_finite()) {
            return schema("cohort.beta_sd must be non-negative".into());
        }
        if !(self.cohort.noise_sigma >= 0.0 && self.cohort.noise_sigma.is_finite()) {
            return schema("cohort.noise_sigma must be non-negative".into());
        }
        if self.reproduction.force_levels.len() < 4 {
            return schema("reproduction.force_levels needs at least 4 levels".into());
        }
        for (i, &f) in self.reproduction.force_levels.iter().enumerate() {
            if !(f > 0.0 && f.is_finite()) {
                return schema(format!("reproduction.force_levels[{i}] must be positive"));
            }
            if self.reproduction.force_levels[i + 1..].contains(&f) {
                return schema("reproduction.force_levels must be distinct".into());
            }
        }
        if self.reproduction.repetitions < 2 {
            return schema("reproduction.repetitions must be at least 2 (per-level test)".into());
        }
        if self.interaction.phases == 0 {
            return schema("interaction.phases must be at least 1".into());
        }
        if !(self.significance > 0.0 && self.significance < 1.0) {
            return schema("significance must lie in (0, 1)".into());
        }
        if !(self.divergence.min > 0.0 && self.divergence.max > self.divergence.min) {
            return schema("divergence bin range must be positive and increasing".into());
        }
        if self.divergence.count == 0 {
            return schema("divergence.count must be at least 1".into());
        }
        Ok(())
    }
}

/// Servo simulation configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServoConfig {
    pub schema_version: u32,
    pub mode: ServoMode,
    /// Run length (s) for the force_step and position_hold modes.
    #[serde(default)]
    pub duration_s: f64,
    /// Torque command (N m), force_step mode.
    #[serde(default)]
    pub torque_cmd: Option<f64>,
    /// Constant load torque (N m), position_hold mode.
    #[serde(default)]
    pub load_torque: Option<f64>,
    /// Optional constant torque injected at the plant from `at_s` on
    /// (force_step mode).
    #[serde(default)]
    pub disturbance: Option<DisturbanceConfig>,
    /// Commanded contact force (N), phase_pair mode.
    #[serde(default)]
    pub force_cmd: Option<f64>,
    #[serde(default)]
    pub phase_seconds: Option<f64>,
    #[serde(default)]
    pub steady_window_seconds: Option<f64>,
    /// Synthetic human, phase_pair mode.
    #[serde(default)]
    pub human: Option<HumanAgentConfig>,
    pub plant: PlantConfig,
    pub controller: ControllerConfig,
    pub coupling: CouplingConfig,
    /// Keep every n-th sample in the time-series dump.
    #[serde(default = "default_decimation")]
    pub decimation: usize,
}

fn default_decimation() -> usize {
    100
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServoMode {
    ForceStep,
    PositionHold,
    PhasePair,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceConfig {
    pub at_s: f64,
    pub torque: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    pub inertia: f64,
    pub torque_constant: f64,
    pub viscous_friction: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    pub nominal_inertia: f64,
    pub nominal_torque_constant: f64,
    pub force_gain: f64,
    pub position_gain: f64,
    pub velocity_gain: f64,
    pub dob_cutoff: f64,
    pub diff_cutoff: f64,
    pub reaction_cutoff: f64,
    pub observer_friction: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    pub lever_arm: f64,
    pub stiffness: f64,
    pub damping: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HumanAgentConfig {
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    pub seed: u64,
}

impl ServoConfig {
    /// Force-step defaults: 1 N m command, 20% plant mismatch, 3 s run.
    pub fn default_force_step() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            mode: ServoMode::ForceStep,
            duration_s: 3.0,
            torque_cmd: Some(1.0),
            load_torque: None,
            disturbance: None,
            force_cmd: None,
            phase_seconds: None,
            steady_window_seconds: None,
            human: None,
            plant: PlantConfig {
                inertia: 0.012,
                torque_constant: 0.8,
                viscous_friction: 0.02,
            },
            controller: ControllerConfig {
                nominal_inertia: 0.01,
                nominal_torque_constant: 1.0,
                force_gain: 60.0,
                position_gain: 400.0,
                velocity_gain: 40.0,
                dob_cutoff: 400.0,
                diff_cutoff: 800.0,
                reaction_cutoff: 400.0,
                observer_friction: 0.02,
                dt: 1e-4,
            },
            coupling: CouplingConfig {
                lever_arm: 0.1,
                stiffness: 100.0,
                damping: 2.0,
            },
            decimation: 100,
        }
    }

    pub fn validate(&self) -> CmdResult<()> {
        let schema = |msg: &str| Err(CmdError::Schema(msg.to_string()));
        if self.schema_version != SCHEMA_VERSION {
            return schema("unsupported schema_version");
        }
        if self.decimation == 0 {
            return schema("decimation must be at least 1");
        }
        match self.mode {
            ServoMode::ForceStep => {
                let ok = self.duration_s.is_finite() && self.duration_s > 0.0;
                if !ok {
                    return schema("duration_s must be positive");
                }
                if self.torque_cmd.is_none() {
                    return schema("force_step mode requires torque_cmd");
                }
                if let Some(d) = &self.disturbance {
                    if !(d.at_s >= 0.0 && d.at_s < self.duration_s) {
                        return schema("disturbance.at_s must fall inside the run");
                    }
                }
            }
            ServoMode::PositionHold => {
                let ok = self.duration_s.is_finite() && self.duration_s > 0.0;
                if !ok {
                    return schema("duration_s must be positive");
                }
                if self.load_torque.is_none() {
                    return schema("position_hold mode requires load_torque");
                }
            }
            ServoMode::PhasePair => {
                if self.force_cmd.is_none() || self.human.is_none() {
                    return schema("phase_pair mode requires force_cmd and human");
                }
                match (self.phase_seconds, self.steady_window_seconds) {
                    (Some(p), Some(w)) if p > w && w > 0.0 => {}
                    _ => {
                        return schema(
                            "phase_pair mode requires phase_seconds > steady_window_seconds > 0",
                        )
                    }
                }
            }
        }
        Ok(())
    }
}

pub fn load_json_config<T: for<'de> Deserialize<'de>>(path: &Path) -> CmdResult<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| CmdError::Schema(format!("reading {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CmdError::Schema(format!("parsing {}: {e}", path.display())))
}
