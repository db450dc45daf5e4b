//! Analysis steps shared by the stability and experiment commands.

use serde::{Deserialize, Serialize};

use phri_core::bias_model::ForceLevel;
use phri_core::fitting::{FitResult, ReproductionTrial};
use phri_core::stability::{empirical_gain, evaluation_value, EvaluationLevel, EvaluationSample};
use phri_core::stats;
use phri_core::Error as CoreError;

use crate::error::{CmdError, CmdResult};

/// Fit parameters plus derived equilibrium, as reported in JSON.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FitSummary {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub rmse: f64,
    pub n_trials: usize,
    pub converged: bool,
    pub iterations: usize,
}

impl FitSummary {
    pub fn from_fit(fit: &FitResult<f64>) -> Self {
        Self {
            alpha: fit.params.alpha(),
            beta: fit.params.beta(),
            gamma: fit.params.implicit_equilibrium().value(),
            rmse: fit.rmse,
            n_trials: fit.n_trials,
            converged: fit.converged,
            iterations: fit.iterations,
        }
    }
}

/// Per-trial evaluation samples for one source, normalized by its own
/// equilibrium point.
pub fn evaluation_samples(
    trials: &[ReproductionTrial<f64>],
    gamma: ForceLevel<f64>,
    source: u32,
) -> Vec<EvaluationSample<f64>> {
    let unit = ForceLevel::new(1.0).expect("one is positive");
    trials
        .iter()
        .enumerate()
        .map(|(idx, t)| {
            let r_n = ForceLevel::new(t.stimulus.value() / gamma.value())
                .expect("positive over positive stays positive");
            let delta_hat = empirical_gain(t.stimulus, t.response);
            EvaluationSample {
                normalized_force: r_n.value(),
                e_value: evaluation_value(unit, r_n, delta_hat),
                source,
                trial: idx as u32,
            }
        })
        .collect()
}

/// One row of the per-level stability table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelRow {
    pub normalized_force: f64,
    pub n: usize,
    pub mean_e: f64,
    /// Absent when the level has zero variance (deterministic samples).
    pub t: Option<f64>,
    pub p: Option<f64>,
    pub significant: bool,
}

/// Runs the per-level one-sided test on every grouped level.
///
/// Zero-variance levels (possible with deterministic agents) resolve to the
/// sign of the mean, matching the estimator's convention.
pub fn level_rows(levels: &[EvaluationLevel<f64>], significance: f64) -> CmdResult<Vec<LevelRow>> {
    levels
        .iter()
        .map(|level| {
            let n = level.e_values.len();
            let mean_e = level.e_values.iter().sum::<f64>() / n as f64;
            match stats::one_sample_t_less(&level.e_values) {
                Ok(test) => Ok(LevelRow {
                    normalized_force: level.normalized_force,
                    n,
                    mean_e,
                    t: Some(test.statistic),
                    p: Some(test.p_value),
                    significant: test.p_value < significance,
                }),
                Err(CoreError::ZeroVariance) => Ok(LevelRow {
                    normalized_force: level.normalized_force,
                    n,
                    mean_e,
                    t: None,
                    p: None,
                    significant: mean_e < 0.0,
                }),
                Err(e) => Err(CmdError::Degenerate(format!(
                    "level {} test: {e}",
                    level.normalized_force
                ))),
            }
        })
        .collect()
}
