//! `phri experiment`: the full synthetic pipeline.
//!
//! For each seeded agent: run the reproduction experiment, fit the bias
//! model, normalize by the fitted equilibrium, and run the interaction
//! experiment. Pooled over agents (outliers removed): the per-level
//! stability table, the unstable region, the group-wise paired tests, and
//! the divergence / asymptotic-convergence rates. Everything derives from
//! one master seed, so reruns are byte-identical.
//!
//! Stream layout: stream 0 samples the cohort parameters; agent `i` uses
//! streams `3i+1` (reproduction noise), `3i+2` (level shuffle), and
//! `3i+3` (interaction order).

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use sha2::{Digest, Sha256};

use phri_core::bias_model::{BiasParameters, ForceLevel};
use phri_core::dynamics::InteractionTrace;
use phri_core::experiments::{
    derive_stream_seed, final_error, group_interactions, initial_error,
    run_interaction_experiment, run_reproduction_experiment, ExperimentAConfig,
    ExperimentBConfig, NoisyHumanConfig,
};
use phri_core::fitting::{self, ReproductionTrial};
use phri_core::stability::{estimate_unstable_region, group_samples, UnstableRegion};
use phri_core::stats::{self, Direction};
use phri_core::Error as CoreError;

use crate::analysis::{evaluation_samples, level_rows, FitSummary, LevelRow};
use crate::config::ExperimentConfig;
use crate::error::{from_core, io_err, CmdError, CmdResult};
use crate::io;

#[derive(Debug, clap::Args)]
pub struct ExperimentArgs {
    /// Experiment configuration JSON; defaults to the hand-finger-like
    /// setup when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override the configuration's master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for CSVs and report.json.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    /// SHA-256 of the canonical configuration JSON.
    pub content_hash: String,
    pub agents: Vec<AgentReport>,
    /// Agents excluded from the pooled statistics.
    pub outliers: Vec<usize>,
    pub pooled_normalized_fit: FitSummary,
    pub levels: Vec<LevelRow>,
    pub unstable_region: Option<UnstableRegion<f64>>,
    /// Present only when each agent ran exactly ten interactions.
    pub groups: Option<Vec<GroupRow>>,
    pub divergence: DivergenceReport,
    /// Share of final forces strictly inside (0.75, 1.25) of the fitted
    /// equilibrium, percent.
    pub asymptotic_convergence_rate: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct AgentReport {
    pub id: usize,
    pub true_alpha: f64,
    pub true_beta: f64,
    pub true_gamma: f64,
    pub noise_sigma: f64,
    pub fit: FitSummary,
}

#[derive(Debug, Serialize)]
pub struct GroupRow {
    pub group: &'static str,
    pub n: usize,
    pub mean_initial_error: f64,
    pub mean_final_error: f64,
    pub in_unstable_region: bool,
    pub direction: Direction,
    pub t: Option<f64>,
    pub p: Option<f64>,
    pub significant: bool,
}

#[derive(Debug, Serialize)]
pub struct DivergenceReport {
    pub bins: Vec<DivergenceBin>,
    pub total_convergent: usize,
    pub total_divergent: usize,
    pub overall_rate: Option<f64>,
    /// Sum of the per-bin rates.
    pub rate_sum: f64,
}

#[derive(Debug, Serialize)]
pub struct DivergenceBin {
    pub lower: f64,
    pub upper: f64,
    pub convergent: usize,
    pub divergent: usize,
    pub rate: Option<f64>,
}

const GROUP_LABELS: [&str; 10] = ["i", "ii", "iii", "iv", "v", "vi", "vii", "viii", "ix", "x"];

struct AgentRun {
    id: usize,
    gamma_hat: ForceLevel<f64>,
    trials: Vec<ReproductionTrial<f64>>,
    traces: Vec<InteractionTrace<f64>>,
}

pub fn run(args: &ExperimentArgs) -> CmdResult<ExperimentReport> {
    let mut config = match &args.config {
        Some(path) => crate::config::load_json_config::<ExperimentConfig>(path)?,
        None => ExperimentConfig::default_hand_finger(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.validate()?;
    run_experiment(&config, &args.out_dir)
}

pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> CmdResult<ExperimentReport> {
    let trials_dir = out_dir.join("trials");
    let traces_dir = out_dir.join("traces");
    for dir in [out_dir, &trials_dir, &traces_dir] {
        fs::create_dir_all(dir).map_err(|e| io_err(&format!("creating {}", dir.display()), e))?;
    }

    let levels: Vec<ForceLevel<f64>> = config
        .reproduction
        .force_levels
        .iter()
        .map(|&f| ForceLevel::new(f).map_err(|e| from_core("force level", e)))
        .collect::<CmdResult<_>>()?;

    // Cohort parameters from stream 0.
    let mut cohort_rng = ChaCha8Rng::seed_from_u64(derive_stream_seed(config.seed, 0));
    let mut agents = Vec::with_capacity(config.cohort.agents);
    for id in 0..config.cohort.agents {
        let gz: f64 = cohort_rng.sample(StandardNormal);
        let bz: f64 = cohort_rng.sample(StandardNormal);
        let gamma = config.cohort.gamma_location * (config.cohort.gamma_log_sd * gz).exp();
        let beta = (config.cohort.beta_mean + config.cohort.beta_sd * bz).clamp(-5.0, -0.05);
        let alpha = gamma.powf(-beta);
        let params = BiasParameters::new(alpha, beta)
            .map_err(|e| from_core(&format!("agent {id} parameters"), e))?;
        agents.push((id, params));
    }

    let mut runs = Vec::with_capacity(agents.len());
    let mut agent_reports = Vec::with_capacity(agents.len());
    for (id, params) in &agents {
        let human = NoisyHumanConfig::new(
            *params,
            config.cohort.noise_sigma,
            derive_stream_seed(config.seed, 3 * *id as u64 + 1),
        )
        .map_err(|e| from_core("agent noise", e))?;

        let rep_cfg = ExperimentAConfig::new(
            levels.clone(),
            config.reproduction.repetitions,
            derive_stream_seed(config.seed, 3 * *id as u64 + 2),
        )
        .map_err(|e| from_core("reproduction protocol", e))?;
        let trials = run_reproduction_experiment(&human, &rep_cfg);

        let fit = fitting::fit_power_law(&trials)
            .map_err(|e| from_core(&format!("fitting agent {id}"), e))?;
        if !fit.converged {
            return Err(CmdError::Degenerate(format!(
                "agent {id}: fit did not converge"
            )));
        }
        let gamma_hat = fit.params.implicit_equilibrium();

        // Interaction order: a seeded permutation of the stimulus levels.
        let mut order_rng =
            ChaCha8Rng::seed_from_u64(derive_stream_seed(config.seed, 3 * *id as u64 + 3));
        let mut initials = levels.clone();
        initials.shuffle(&mut order_rng);
        let int_cfg = ExperimentBConfig::new(initials, config.interaction.phases)
            .map_err(|e| from_core("interaction protocol", e))?;
        let traces = run_interaction_experiment(&human, &int_cfg);

        io::write_trials(
            &trials_dir.join(format!("agent_{id:02}.csv")),
            &fitting::normalize_trials(&trials, gamma_hat),
        )?;
        let normalized: Vec<(usize, Vec<f64>)> = traces
            .iter()
            .enumerate()
            .map(|(run, t)| (run, io::trace_forces(t, gamma_hat.value())))
            .collect();
        io::write_traces(&traces_dir.join(format!("agent_{id:02}.csv")), &normalized)?;

        agent_reports.push(AgentReport {
            id: *id,
            true_alpha: params.alpha(),
            true_beta: params.beta(),
            true_gamma: params.implicit_equilibrium().value(),
            noise_sigma: config.cohort.noise_sigma,
            fit: FitSummary::from_fit(&fit),
        });
        runs.push(AgentRun {
            id: *id,
            gamma_hat,
            trials,
            traces,
        });
    }

    // Outlier rule on final normalized absolute errors, then drop flagged
    // agents from every pooled statistic.
    let finals: Vec<Vec<f64>> = runs
        .iter()
        .map(|r| {
            r.traces
                .iter()
                .map(|t| final_error(t, r.gamma_hat))
                .collect()
        })
        .collect();
    let outliers =
        stats::outlier_flag(&finals).map_err(|e| from_core("outlier screening", e))?;
    let kept: Vec<&AgentRun> = runs
        .iter()
        .filter(|r| !outliers.contains(&r.id))
        .collect();
    if kept.len() < 2 {
        return Err(CmdError::Degenerate(
            "fewer than two agents survive outlier screening".into(),
        ));
    }

    // Pooled per-level stability analysis.
    let mut samples = Vec::new();
    for r in &kept {
        samples.extend(evaluation_samples(&r.trials, r.gamma_hat, r.id as u32));
    }
    let grouped = group_samples(&samples);
    let level_table = level_rows(&grouped, config.significance)?;
    let region = estimate_unstable_region(&grouped, config.significance)
        .map_err(|e| from_core("estimating the unstable region", e))?;

    // Pooled normalized fit.
    let mut pooled = Vec::new();
    for r in &kept {
        pooled.extend(fitting::normalize_trials(&r.trials, r.gamma_hat));
    }
    let pooled_fit =
        fitting::fit_power_law(&pooled).map_err(|e| from_core("pooled fit", e))?;
    if !pooled_fit.converged {
        return Err(CmdError::Degenerate("pooled fit did not converge".into()));
    }

    let groups = group_table(&kept, region.as_ref(), config.significance)?;
    let divergence = divergence_report(&samples, &config.divergence);

    // Asymptotic convergence across kept agents, each normalized by its
    // own fitted equilibrium.
    let mut inside = 0usize;
    let mut total = 0usize;
    for r in &kept {
        for t in &r.traces {
            let x = t.final_human() / r.gamma_hat.value();
            if x > 0.75 && x < 1.25 {
                inside += 1;
            }
            total += 1;
        }
    }
    let asymptotic = if total > 0 {
        Some(100.0 * inside as f64 / total as f64)
    } else {
        None
    };

    let report = ExperimentReport {
        config: config.clone(),
        content_hash: config_hash(config)?,
        agents: agent_reports,
        outliers,
        pooled_normalized_fit: FitSummary::from_fit(&pooled_fit),
        levels: level_table,
        unstable_region: region,
        groups,
        divergence,
        asymptotic_convergence_rate: asymptotic,
    };
    io::write_json(&out_dir.join("report.json"), &report)?;
    Ok(report)
}

fn group_table(
    kept: &[&AgentRun],
    region: Option<&UnstableRegion<f64>>,
    significance: f64,
) -> CmdResult<Option<Vec<GroupRow>>> {
    if kept.iter().any(|r| r.traces.len() != 10) {
        return Ok(None);
    }
    let mut rows = Vec::with_capacity(10);
    for (g, label) in GROUP_LABELS.iter().enumerate() {
        let mut initial = Vec::with_capacity(kept.len());
        let mut final_ = Vec::with_capacity(kept.len());
        for r in kept {
            let order = group_interactions(&r.traces, r.gamma_hat)
                .map_err(|e| from_core("grouping interactions", e))?;
            let trace = &r.traces[order[g]];
            initial.push(initial_error(trace, r.gamma_hat));
            final_.push(final_error(trace, r.gamma_hat));
        }
        let mean_initial = initial.iter().sum::<f64>() / initial.len() as f64;
        let mean_final = final_.iter().sum::<f64>() / final_.len() as f64;
        let in_region = region.is_some_and(|rg| rg.contains_error(mean_initial));
        // Outside the region the errors should shrink; inside, grow.
        let direction = if in_region {
            Direction::Less
        } else {
            Direction::Greater
        };
        let (t, p, significant) =
            match stats::paired_t_one_sided(&initial, &final_, direction) {
                Ok(test) => (
                    Some(test.statistic),
                    Some(test.p_value),
                    test.p_value < significance,
                ),
                Err(CoreError::ZeroVariance) => (None, None, false),
                Err(e) => return Err(from_core("group paired test", e)),
            };
        rows.push(GroupRow {
            group: label,
            n: kept.len(),
            mean_initial_error: mean_initial,
            mean_final_error: mean_final,
            in_unstable_region: in_region,
            direction,
            t,
            p,
            significant,
        });
    }
    Ok(Some(rows))
}

fn divergence_report(
    samples: &[phri_core::stability::EvaluationSample<f64>],
    bins: &crate::config::DivergenceBins,
) -> DivergenceReport {
    let width = (bins.max - bins.min) / bins.count as f64;
    let mut rows = Vec::with_capacity(bins.count);
    let mut total_conv = 0usize;
    let mut total_div = 0usize;
    let mut rate_sum = 0.0;
    for j in 0..bins.count {
        let lower = bins.min + j as f64 * width;
        let upper = lower + width;
        let last = j + 1 == bins.count;
        let mut convergent = 0usize;
        let mut divergent = 0usize;
        for s in samples {
            let x = s.normalized_force;
            let inside = x >= lower && (x < upper || (last && x <= upper));
            if !inside {
                continue;
            }
            if s.e_value < 0.0 {
                convergent += 1;
            } else {
                divergent += 1;
            }
        }
        total_conv += convergent;
        total_div += divergent;
        let rate = phri_core::experiments::divergence_rate::<f64>(convergent, divergent).ok();
        if let Some(r) = rate {
            rate_sum += r;
        }
        rows.push(DivergenceBin {
            lower,
            upper,
            convergent,
            divergent,
            rate,
        });
    }
    let overall_rate =
        phri_core::experiments::divergence_rate::<f64>(total_conv, total_div).ok();
    DivergenceReport {
        bins: rows,
        total_convergent: total_conv,
        total_divergent: total_div,
        overall_rate,
        rate_sum,
    }
}

fn config_hash(config: &ExperimentConfig) -> CmdResult<String> {
    let bytes = serde_json::to_vec(config)
        .map_err(|e| CmdError::Schema(format!("hashing config: {e}")))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
