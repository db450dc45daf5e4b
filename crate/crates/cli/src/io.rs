//! CSV and JSON formats of the pipeline.
//!
//! Trial files: header `trial,stimulus_n,response_n`, one row per
//! reproduction trial. Trace files: header `run,k,phase,force_n`, one row
//! per phase event in chronological order (`robot` at `k = 0`, then
//! alternating `human`/`robot` rows sharing each force index). Numeric
//! fields are written with 17 significant digits, which round-trips f64
//! exactly.

use std::fs;
use std::io::Write;
use std::path::Path;

use phri_core::bias_model::ForceLevel;
use phri_core::dynamics::InteractionTrace;
use phri_core::fitting::ReproductionTrial;

use crate::error::{io_err, CmdError, CmdResult};

/// 17 significant digits: lossless for f64.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub const TRIAL_HEADER: [&str; 3] = ["trial", "stimulus_n", "response_n"];
pub const TRACE_HEADER: [&str; 4] = ["run", "k", "phase", "force_n"];

pub fn write_trials(path: &Path, trials: &[ReproductionTrial<f64>]) -> CmdResult<()> {
    let mut out = String::new();
    out.push_str(&TRIAL_HEADER.join(","));
    out.push('\n');
    for (i, t) in trials.iter().enumerate() {
        out.push_str(&format!(
            "{i},{},{}\n",
            format_float(t.stimulus.value()),
            format_float(t.response.value())
        ));
    }
    fs::write(path, out).map_err(|e| io_err(&format!("writing {}", path.display()), e))
}

pub fn read_trials(path: &Path) -> CmdResult<Vec<ReproductionTrial<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CmdError::Schema(format!("reading {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CmdError::Schema(format!("reading {}: {e}", path.display())))?;
    if headers != TRIAL_HEADER.as_slice() {
        return Err(CmdError::Schema(format!(
            "{}: expected header {:?}, got {:?}",
            path.display(),
            TRIAL_HEADER.join(","),
            headers
        )));
    }
    let mut trials = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| CmdError::Schema(format!("{} row {row}: {e}", path.display())))?;
        let field = |idx: usize, name: &str| -> CmdResult<f64> {
            record
                .get(idx)
                .ok_or_else(|| {
                    CmdError::Schema(format!("{} row {row}: missing {name}", path.display()))
                })?
                .parse::<f64>()
                .map_err(|e| {
                    CmdError::Schema(format!("{} row {row}: bad {name}: {e}", path.display()))
                })
        };
        let stimulus = force_field(path, row, "stimulus_n", field(1, "stimulus_n")?)?;
        let response = force_field(path, row, "response_n", field(2, "response_n")?)?;
        trials.push(ReproductionTrial::new(stimulus, response));
    }
    Ok(trials)
}

fn force_field(path: &Path, row: usize, name: &str, value: f64) -> CmdResult<ForceLevel<f64>> {
    ForceLevel::new(value).map_err(|e| {
        CmdError::Schema(format!("{} row {row}: {name}: {e}", path.display()))
    })
}

/// Writes traces as chronological phase events. Forces may be normalized
/// or raw; the schema does not care.
pub fn write_traces(path: &Path, traces: &[(usize, Vec<f64>)]) -> CmdResult<()> {
    let mut out = String::new();
    out.push_str(&TRACE_HEADER.join(","));
    out.push('\n');
    for (run, forces) in traces {
        for (k, &f) in forces.iter().enumerate() {
            if k == 0 {
                out.push_str(&format!("{run},0,robot,{}\n", format_float(f)));
            } else {
                out.push_str(&format!("{run},{k},human,{}\n", format_float(f)));
                if k + 1 < forces.len() {
                    out.push_str(&format!("{run},{k},robot,{}\n", format_float(f)));
                }
            }
        }
    }
    fs::write(path, out).map_err(|e| io_err(&format!("writing {}", path.display()), e))
}

/// Reads traces back into per-run force sequences.
pub fn read_traces(path: &Path) -> CmdResult<Vec<(usize, Vec<f64>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CmdError::Schema(format!("reading {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CmdError::Schema(format!("reading {}: {e}", path.display())))?;
    if headers != TRACE_HEADER.as_slice() {
        return Err(CmdError::Schema(format!(
            "{}: expected header {:?}, got {:?}",
            path.display(),
            TRACE_HEADER.join(","),
            headers
        )));
    }
    let mut runs: Vec<(usize, Vec<f64>)> = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| CmdError::Schema(format!("{} row {row}: {e}", path.display())))?;
        let bad = |what: &str| CmdError::Schema(format!("{} row {row}: {what}", path.display()));
        let run: usize = record
            .get(0)
            .ok_or_else(|| bad("missing run"))?
            .parse()
            .map_err(|_| bad("bad run"))?;
        let k: usize = record
            .get(1)
            .ok_or_else(|| bad("missing k"))?
            .parse()
            .map_err(|_| bad("bad k"))?;
        let phase = record.get(2).ok_or_else(|| bad("missing phase"))?;
        let force: f64 = record
            .get(3)
            .ok_or_else(|| bad("missing force_n"))?
            .parse()
            .map_err(|_| bad("bad force_n"))?;
        // The robot rows replay already-recorded forces; the sequence is
        // the initial robot force plus every human force.
        let keep = phase == "human" || (phase == "robot" && k == 0);
        if !keep {
            continue;
        }
        match runs.iter_mut().find(|(r, _)| *r == run) {
            Some((_, forces)) => {
                if forces.len() != k {
                    return Err(bad("out-of-order force index"));
                }
                forces.push(force);
            }
            None => {
                if k != 0 {
                    return Err(bad("run must start at k = 0"));
                }
                runs.push((run, vec![force]));
            }
        }
    }
    Ok(runs)
}

/// Extracts the plain force sequence of a trace, optionally normalized.
pub fn trace_forces(trace: &InteractionTrace<f64>, scale: f64) -> Vec<f64> {
    trace.entries().iter().map(|e| e.robot / scale).collect()
}

/// Serializes a report as pretty JSON with a trailing newline.
pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> CmdResult<()> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| CmdError::Schema(format!("serializing {}: {e}", path.display())))?;
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|e| io_err(&format!("writing {}", path.display()), e))
}

pub fn print_json<T: serde::Serialize>(value: &T) -> CmdResult<()> {
    let out = serde_json::to_string_pretty(value)
        .map_err(|e| CmdError::Schema(format!("serializing report: {e}")))?;
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "{out}").map_err(|e| io_err("writing stdout", e))
}
