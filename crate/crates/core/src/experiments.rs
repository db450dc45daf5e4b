//! Synthetic agents and seeded experiment pipelines.
//!
//! A synthetic human reproduces forces through the bias model with
//! multiplicative lognormal noise, `h = alpha r^(1+beta) exp(sigma xi)`,
//! which keeps every force positive without clamping. Two protocols mirror
//! the behavioral runs:
//!
//! * a reproduction experiment (independent stimulus/response pairs over a
//!   shuffled level schedule), used to fit the bias model, and
//! * an interaction experiment (alternating robot and human phases from a
//!   set of initial forces), used to watch the loop converge or diverge.
//!
//! Every run draws from its own counter-derived rng stream, so results are
//! reproducible and independent of scheduling.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::bias_model::{BiasParameters, ForceLevel};
use crate::dynamics::InteractionTrace;
use crate::error::{Error, Result};
use crate::float::Float;

/// A stochastic stand-in for a participant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoisyHumanConfig<T> {
    pub params: BiasParameters<T>,
    /// Lognormal noise scale on the reproduced force; 0 is deterministic.
    pub noise_sigma: T,
    /// Master seed of the agent's noise streams.
    pub seed: u64,
}

impl<T: Float> NoisyHumanConfig<T> {
    pub fn new(params: BiasParameters<T>, noise_sigma: T, seed: u64) -> Result<Self> {
        if !(noise_sigma.is_finite() && noise_sigma >= T::zero()) {
            return Err(Error::InvalidConfig("noise_sigma must be non-negative"));
        }
        Ok(Self {
            params,
            noise_sigma,
            seed,
        })
    }
}

/// Schedule of a force-reproduction experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentAConfig<T> {
    pub force_levels: Vec<ForceLevel<T>>,
    pub repetitions: usize,
    pub shuffle_seed: u64,
}

impl<T: Float> ExperimentAConfig<T> {
    pub fn new(force_levels: Vec<ForceLevel<T>>, repetitions: usize, shuffle_seed: u64) -> Result<Self> {
        if force_levels.is_empty() {
            return Err(Error::InvalidConfig("force_levels must not be empty"));
        }
        if repetitions == 0 {
            return Err(Error::InvalidConfig("repetitions must be at least 1"));
        }
        for (i, a) in force_levels.iter().enumerate() {
            if force_levels[i + 1..].iter().any(|b| b.value() == a.value()) {
                return Err(Error::InvalidConfig("force levels must be distinct"));
            }
        }
        Ok(Self {
            force_levels,
            repetitions,
            shuffle_seed,
        })
    }
}

/// Schedule of an interaction experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentBConfig<T> {
    /// Initial robot forces, one interaction per entry, no repetition.
    pub initial_forces: Vec<ForceLevel<T>>,
    /// Number of robot/human phase pairs per interaction.
    pub phases: usize,
}

impl<T: Float> ExperimentBConfig<T> {
    pub fn new(initial_forces: Vec<ForceLevel<T>>, phases: usize) -> Result<Self> {
        if initial_forces.is_empty() {
            return Err(Error::InvalidConfig("initial_forces must not be empty"));
        }
        if phases == 0 {
            return Err(Error::InvalidConfig("phases must be at least 1"));
        }
        for (i, a) in initial_forces.iter().enumerate() {
            if initial_forces[i + 1..].iter().any(|b| b.value() == a.value()) {
                return Err(Error::InvalidConfig("initial forces must be distinct"));
            }
        }
        Ok(Self {
            initial_forces,
            phases,
        })
    }
}

/// SplitMix64 step, the documented seed-splitting rule: stream `i` of a
/// master seed is `splitmix64(master + (i+1) * GOLDEN)`. Parallel and
/// serial execution therefore draw identical streams.
pub fn derive_stream_seed(master: u64, index: u64) -> u64 {
    const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One noisy reproduction: `h = alpha r^(1+beta) exp(sigma xi)`.
///
/// The lognormal factor keeps `h` positive for any draw; its median is 1,
/// so the deterministic model is the median response.
pub fn reproduce_noisy<T, R>(cfg: &NoisyHumanConfig<T>, r: ForceLevel<T>, rng: &mut R) -> ForceLevel<T>
where
    T: Float,
    R: Rng + ?Sized,
    StandardNormal: Distribution<T>,
{
    let xi: T = rng.sample(StandardNormal);
    let noise = (cfg.noise_sigma * xi).exp();
    ForceLevel::new(cfg.params.reproduce(r).value() * noise)
        .expect("positive times positive noise factor stays positive")
}

/// Runs a reproduction experiment: `levels x repetitions` trials in a
/// seeded-shuffled order.
pub fn run_reproduction_experiment<T>(
    human: &NoisyHumanConfig<T>,
    cfg: &ExperimentAConfig<T>,
) -> Vec<crate::fitting::ReproductionTrial<T>>
where
    T: Float,
    StandardNormal: Distribution<T>,
{
    let mut schedule: Vec<ForceLevel<T>> = Vec::with_capacity(cfg.force_levels.len() * cfg.repetitions);
    for _ in 0..cfg.repetitions {
        schedule.extend_from_slice(&cfg.force_levels);
    }
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.shuffle_seed);
    schedule.shuffle(&mut shuffle_rng);

    let mut noise_rng = ChaCha8Rng::seed_from_u64(derive_stream_seed(human.seed, 0));
    schedule
        .into_iter()
        .map(|stimulus| {
            let response = reproduce_noisy(human, stimulus, &mut noise_rng);
            crate::fitting::ReproductionTrial::new(stimulus, response)
        })
        .collect()
}

/// Runs an interaction experiment: one trace per initial force.
///
/// Each trace alternates exact robot reproduction with noisy human
/// reproduction for `cfg.phases` pairs, so a trace holds `phases + 1`
/// entries and its final human force is `h[phases]`. Trace `i` draws from
/// stream `i + 1` of the agent's seed.
pub fn run_interaction_experiment<T>(
    human: &NoisyHumanConfig<T>,
    cfg: &ExperimentBConfig<T>,
) -> Vec<InteractionTrace<T>>
where
    T: Float,
    StandardNormal: Distribution<T>,
{
    cfg.initial_forces
        .iter()
        .enumerate()
        .map(|(run, &r0)| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(derive_stream_seed(human.seed, run as u64 + 1));
            let mut forces = Vec::with_capacity(cfg.phases + 1);
            let mut r = r0;
            forces.push(r.value());
            for _ in 0..cfg.phases {
                r = reproduce_noisy(human, r, &mut rng);
                forces.push(r.value());
            }
            InteractionTrace::from_forces(forces)
        })
        .collect()
}

/// Per-phase normalized absolute errors
/// `(|gamma - r_k| / gamma, |gamma - h_k| / gamma)`.
pub fn normalized_errors<T: Float>(trace: &InteractionTrace<T>, gamma: ForceLevel<T>) -> Vec<(T, T)> {
    let g = gamma.value();
    trace
        .entries()
        .iter()
        .map(|e| ((g - e.robot).abs() / g, (g - e.human).abs() / g))
        .collect()
}

/// Initial normalized absolute error of a trace.
pub fn initial_error<T: Float>(trace: &InteractionTrace<T>, gamma: ForceLevel<T>) -> T {
    (gamma.value() - trace.initial_robot()).abs() / gamma.value()
}

/// Final normalized absolute error of a trace.
pub fn final_error<T: Float>(trace: &InteractionTrace<T>, gamma: ForceLevel<T>) -> T {
    (gamma.value() - trace.final_human()).abs() / gamma.value()
}

/// Orders exactly ten interactions into groups i-x by descending initial
/// normalized absolute error; ties break by ascending initial force.
///
/// Returns indices into `traces`: element 0 is group i (largest initial
/// error), element 9 is group x (smallest).
pub fn group_interactions<T: Float>(
    traces: &[InteractionTrace<T>],
    gamma: ForceLevel<T>,
) -> Result<Vec<usize>> {
    if traces.len() != 10 {
        return Err(Error::InsufficientData {
            what: "interactions (exactly ten)",
            needed: 10,
            got: traces.len(),
        });
    }
    let mut order: Vec<usize> = (0..traces.len()).collect();
    order.sort_by(|&a, &b| {
        let ea = initial_error(&traces[a], gamma);
        let eb = initial_error(&traces[b], gamma);
        eb.partial_cmp(&ea)
            .unwrap()
            .then_with(|| {
                traces[a]
                    .initial_robot()
                    .partial_cmp(&traces[b].initial_robot())
                    .unwrap()
            })
    });
    Ok(order)
}

/// Divergence rate in percent: `100 n_div / (n_conv + n_div)`.
pub fn divergence_rate<T: Float>(n_convergent: usize, n_divergent: usize) -> Result<T> {
    let total = n_convergent + n_divergent;
    if total == 0 {
        return Err(Error::InsufficientData {
            what: "evaluation values in the bin",
            needed: 1,
            got: 0,
        });
    }
    Ok(T::cast(100.0) * T::of_usize(n_divergent) / T::of_usize(total))
}

/// Share of traces whose final human force lies strictly inside
/// `(0.75 gamma, 1.25 gamma)`, in percent.
pub fn asymptotic_convergence_rate<T: Float>(
    traces: &[InteractionTrace<T>],
    gamma: ForceLevel<T>,
) -> Result<T> {
    if traces.is_empty() {
        return Err(Error::InsufficientData {
            what: "traces",
            needed: 1,
            got: 0,
        });
    }
    let lo = T::cast(0.75);
    let hi = T::cast(1.25);
    let inside = traces
        .iter()
        .filter(|t| {
            let x = t.final_human() / gamma.value();
            x > lo && x < hi
        })
        .count();
    Ok(T::cast(100.0) * T::of_usize(inside) / T::of_usize(traces.len()))
}
