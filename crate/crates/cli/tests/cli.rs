//! End-to-end checks of the command layer: exit codes, file formats, and
//! the reference-cohort fixture expectations.

use std::path::Path;
use std::process::Command;

use phri_cli::analysis::FitSummary;
use phri_cli::commands::experiment::run_experiment;
use phri_cli::config::ExperimentConfig;
use phri_cli::io;

use phri_core::bias_model::{BiasParameters, ForceLevel};
use phri_core::fitting::ReproductionTrial;

fn force(v: f64) -> ForceLevel<f64> {
    ForceLevel::new(v).unwrap()
}

fn noiseless_csv(path: &Path, alpha: f64, beta: f64) {
    let p = BiasParameters::new(alpha, beta).unwrap();
    let trials: Vec<ReproductionTrial<f64>> = (1..=10)
        .map(|k| {
            let r = force(k as f64);
            ReproductionTrial::new(r, p.reproduce(r))
        })
        .collect();
    io::write_trials(path, &trials).unwrap();
}

fn phri() -> Command {
    Command::new(env!("CARGO_BIN_EXE_phri"))
}

#[test]
fn fit_exit_codes() {
    let dir = tempfile::tempdir().unwrap();

    // Convergent fit: exit 0, gamma = 1 for alpha = 1.
    let good = dir.path().join("good.csv");
    noiseless_csv(&good, 1.0, -0.5);
    let out_json = dir.path().join("fit.json");
    let out = phri()
        .args(["fit", "--input"])
        .arg(&good)
        .arg("--out")
        .arg(&out_json)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let summary: FitSummary =
        serde_json::from_str(&std::fs::read_to_string(&out_json).unwrap()).unwrap();
    assert!((summary.gamma - 1.0).abs() < 1e-8);
    assert!((summary.alpha - 1.0).abs() < 1e-8);
    assert!((summary.beta + 0.5).abs() < 1e-8);

    // Empty file: schema error, exit 1.
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let out = phri().args(["fit", "--input"]).arg(&empty).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    // Missing file: exit 1.
    let out = phri()
        .args(["fit", "--input"])
        .arg(dir.path().join("nope.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    // Flat ratios: no interior optimum, exit 2.
    let flat = dir.path().join("flat.csv");
    let trials: Vec<ReproductionTrial<f64>> = (1..=6)
        .map(|k| ReproductionTrial::new(force(k as f64), force(k as f64)))
        .collect();
    io::write_trials(&flat, &trials).unwrap();
    let out = phri().args(["fit", "--input"]).arg(&flat).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_writes_readable_traces() {
    let dir = tempfile::tempdir().unwrap();
    let out_csv = dir.path().join("trace.csv");
    let out = phri()
        .args([
            "simulate", "--alpha", "1.0", "--beta", "-0.5", "--r0", "4.0", "--phases", "3",
            "--out",
        ])
        .arg(&out_csv)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let runs = io::read_traces(&out_csv).unwrap();
    assert_eq!(runs.len(), 1);
    assert_eq!(runs[0].1.len(), 4);
    assert!((runs[0].1[1] - 2.0).abs() < 1e-12);

    // Marginally stable baseline: constant trace.
    let out_csv = dir.path().join("flat_trace.csv");
    let out = phri()
        .args([
            "simulate", "--alpha", "1.0", "--beta", "-0.5", "--r0", "4.0", "--phases", "3",
            "--no-bias", "--out",
        ])
        .arg(&out_csv)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let runs = io::read_traces(&out_csv).unwrap();
    assert!(runs[0].1.iter().all(|&f| f == 4.0));

    // Normalized output divides by the equilibrium point (gamma = 2 for
    // alpha = 2, beta = -1).
    let out_csv = dir.path().join("norm_trace.csv");
    let out = phri()
        .args([
            "simulate", "--alpha", "2.0", "--beta", "-1.0", "--r0", "1.0", "--phases", "2",
            "--normalize", "--out",
        ])
        .arg(&out_csv)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let runs = io::read_traces(&out_csv).unwrap();
    assert!((runs[0].1[0] - 0.5).abs() < 1e-12);

    // Invalid parameters are schema errors.
    let out = phri()
        .args(["simulate", "--alpha", "1.0", "--beta", "0.5", "--r0", "4.0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn stability_command_reports_levels() {
    let dir = tempfile::tempdir().unwrap();
    // A noisy single agent: build through the library for a seeded file.
    use phri_core::experiments::{run_reproduction_experiment, ExperimentAConfig, NoisyHumanConfig};
    let params = BiasParameters::new(2.133f64.powf(0.625), -0.625).unwrap();
    let human = NoisyHumanConfig::new(params, 0.2, 20_240).unwrap();
    let cfg = ExperimentAConfig::new((1..=10).map(|k| force(k as f64)).collect(), 5, 7).unwrap();
    let trials = run_reproduction_experiment(&human, &cfg);
    let path = dir.path().join("trials.csv");
    io::write_trials(&path, &trials).unwrap();

    let out_json = dir.path().join("stability.json");
    let out = phri()
        .args(["stability", "--input"])
        .arg(&path)
        .arg("--out")
        .arg(&out_json)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_json).unwrap()).unwrap();
    assert_eq!(v["levels"].as_array().unwrap().len(), 10);
    assert!(v["fit"]["converged"].as_bool().unwrap());
}

#[test]
fn experiment_defaults_match_reference_cohort_scales() {
    // The pooled normalized fit of the default synthetic cohort lands on
    // the reference normalized parameters within +-0.05.
    let dir = tempfile::tempdir().unwrap();
    let mut config = ExperimentConfig::default_hand_finger();
    config.seed = 1;
    let report = run_experiment(&config, dir.path()).unwrap();
    let fit = &report.pooled_normalized_fit;
    assert!(
        (fit.alpha - 1.006).abs() <= 0.05,
        "pooled alpha {}",
        fit.alpha
    );
    assert!(
        (fit.beta + 0.625).abs() <= 0.05,
        "pooled beta {}",
        fit.beta
    );
    // Normalization pins the pooled equilibrium near 1.
    assert!((fit.gamma - 1.0).abs() <= 0.05, "pooled gamma {}", fit.gamma);

    // Per-agent fitting errors sit at the reference cohort scale.
    let mean_rmse = report.agents.iter().map(|a| a.fit.rmse).sum::<f64>()
        / report.agents.len() as f64;
    assert!(
        (mean_rmse - 0.174).abs() <= 0.05,
        "mean per-agent rmse {mean_rmse}"
    );

    // Emitted files re-ingest losslessly.
    let trials = io::read_trials(&dir.path().join("trials/agent_00.csv")).unwrap();
    assert_eq!(trials.len(), 50);
    let traces = io::read_traces(&dir.path().join("traces/agent_00.csv")).unwrap();
    assert_eq!(traces.len(), 10);
    assert!(traces.iter().all(|(_, f)| f.len() == 21));

    // With noise on, the unstable region exists and straddles 1.
    let region = report.unstable_region.expect("noisy cohort has a region");
    assert!(region.lower < 1.0 && 1.0 < region.upper);

    // Ten groups, and the innermost group sits inside the unstable region.
    let groups = report.groups.expect("ten interactions per agent");
    assert_eq!(groups.len(), 10);
    assert!(groups[9].in_unstable_region);
    assert!(groups[0].mean_initial_error > groups[9].mean_initial_error);

    // Pool the emitted normalized trials and run the fit command on them:
    // the cohort-level parameters come back within +-0.05.
    let mut pooled = Vec::new();
    for id in 0..config.cohort.agents {
        pooled.extend(io::read_trials(&dir.path().join(format!("trials/agent_{id:02}.csv"))).unwrap());
    }
    let pooled_path = dir.path().join("pooled.csv");
    io::write_trials(&pooled_path, &pooled).unwrap();
    let fit_json = dir.path().join("pooled_fit.json");
    let out = phri()
        .args(["fit", "--input"])
        .arg(&pooled_path)
        .arg("--out")
        .arg(&fit_json)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let summary: FitSummary =
        serde_json::from_str(&std::fs::read_to_string(&fit_json).unwrap()).unwrap();
    assert!((summary.alpha - 1.006).abs() <= 0.05);
    assert!((summary.beta + 0.625).abs() <= 0.05);
}

#[test]
fn stability_needs_levels_on_both_sides() {
    // All stimuli above the fitted equilibrium: no lower-side levels, so
    // the region estimate is degenerate (exit 2).
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one_sided.csv");
    let p = BiasParameters::new(1.0, -0.5).unwrap(); // gamma = 1
    let trials: Vec<ReproductionTrial<f64>> = (2..=10)
        .flat_map(|k| {
            let r = force(k as f64);
            [ReproductionTrial::new(r, p.reproduce(r)); 2]
        })
        .collect();
    io::write_trials(&path, &trials).unwrap();
    let out = phri()
        .args(["stability", "--input"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn deterministic_cohort_has_no_unstable_region() {
    // With sigma = 0 every per-trial evaluation value is negative, so no
    // level fails the stability test and no region is detected.
    let dir = tempfile::tempdir().unwrap();
    let mut config = ExperimentConfig::default_hand_finger();
    config.cohort.agents = 6;
    config.cohort.noise_sigma = 0.0;
    config.seed = 11;
    let report = run_experiment(&config, dir.path()).unwrap();
    assert_eq!(report.unstable_region, None);
    assert_eq!(report.divergence.total_divergent, 0);
    assert!(report.levels.iter().all(|row| row.mean_e < 0.0));
}

#[test]
fn experiment_rejects_bad_configs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("bad.json");

    // Unknown key.
    std::fs::write(
        &cfg_path,
        serde_json::to_string(&serde_json::json!({
            "schema_version": 1, "seed": 1, "unknown_key": true,
            "cohort": {"agents": 4, "gamma_location": 2.0, "gamma_log_sd": 0.1,
                        "beta_mean": -0.6, "beta_sd": 0.0, "noise_sigma": 0.1},
            "reproduction": {"force_levels": [1.0, 2.0, 3.0, 4.0], "repetitions": 2},
            "interaction": {"phases": 5}
        }))
        .unwrap(),
    )
    .unwrap();
    let out = phri()
        .args(["experiment", "--config"])
        .arg(&cfg_path)
        .arg("--out-dir")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{out:?}");
}

#[test]
fn servo_validation_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("servo.json");
    let mut cfg = serde_json::to_value(phri_cli::config::ServoConfig::default_force_step()).unwrap();

    // Sample time above 1 ms is rejected.
    cfg["controller"]["dt"] = serde_json::json!(2e-3);
    std::fs::write(&cfg_path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let out = phri()
        .args(["servo", "--config"])
        .arg(&cfg_path)
        .arg("--out-dir")
        .arg(dir.path().join("s1"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{out:?}");

    // Zero-length run is rejected.
    cfg["controller"]["dt"] = serde_json::json!(1e-4);
    cfg["duration_s"] = serde_json::json!(0.0);
    std::fs::write(&cfg_path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let out = phri()
        .args(["servo", "--config"])
        .arg(&cfg_path)
        .arg("--out-dir")
        .arg(dir.path().join("s2"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{out:?}");

    // An unstable tuning diverges: exit 3.
    cfg["duration_s"] = serde_json::json!(1.0);
    cfg["controller"]["force_gain"] = serde_json::json!(5e7);
    cfg["controller"]["dob_cutoff"] = serde_json::json!(9e3);
    std::fs::write(&cfg_path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let out = phri()
        .args(["servo", "--config"])
        .arg(&cfg_path)
        .arg("--out-dir")
        .arg(dir.path().join("s3"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{out:?}");
}

#[test]
fn report_command_summarizes() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = ExperimentConfig::default_hand_finger();
    config.cohort.agents = 4;
    config.interaction.phases = 5;
    config.seed = 3;
    run_experiment(&config, dir.path()).unwrap();
    let out = phri()
        .args(["report", "--in-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("pooled normalized fit"));
    assert!(text.contains("agents: 4"));
}
