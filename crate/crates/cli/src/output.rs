//! CSV and JSONL writers. Column sets are fixed per problem: `x_k` columns
//! follow the grid dimension and `y_i` columns the number of players.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use csv::Writer;

use crate::baseline::BaselineRun;
use crate::error::CliResult;
use crate::runner::Replicate;

pub const SUMMARY_FILE: &str = "summary.csv";
pub const CONVERGENCE_FILE: &str = "convergence.csv";
pub const TIMINGS_FILE: &str = "timings.csv";
pub const BASELINE_FILE: &str = "baseline.csv";

fn numbered(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |k| format!("{prefix}_{k}"))
}

fn nums(values: &[f64]) -> impl Iterator<Item = String> + '_ {
    values.iter().map(|v| v.to_string())
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

/// One row per replicate.
pub fn write_summary(path: &Path, reps: &[Replicate]) -> CliResult<()> {
    let mut w = Writer::from_path(path)?;
    let (d, p) = dims(reps);
    let mut header: Vec<String> = [
        "replicate",
        "seed",
        "mode",
        "evaluations",
        "evaluations_to_convergence",
        "iterations",
        "stop",
        "final_index",
        "pe",
        "min_j",
    ]
    .map(String::from)
    .into();
    header.extend(numbered("x", d));
    header.extend(numbered("y", p));
    w.write_record(&header)?;
    for rep in reps {
        let Some(f) = &rep.log.outcome else { continue };
        let mut row = vec![
            rep.replicate.to_string(),
            rep.seed.to_string(),
            mode_name(rep),
            f.evaluations.to_string(),
            f.evaluations_to_convergence.to_string(),
            f.iterations.to_string(),
            enum_name(&f.stop),
            f.index.to_string(),
            f.pe.to_string(),
            opt(f.min_j),
        ];
        row.extend(nums(&f.x));
        row.extend(nums(&f.values));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per evaluated design point: the observed objective values and
/// the estimate held when the point was chosen.
pub fn write_convergence(path: &Path, reps: &[Replicate]) -> CliResult<()> {
    let mut w = Writer::from_path(path)?;
    let (_, p) = dims(reps);
    let mut header: Vec<String> = [
        "replicate",
        "evaluations",
        "iteration",
        "index",
        "best_pe_index",
        "best_pe",
        "min_j",
        "gamma",
    ]
    .map(String::from)
    .into();
    header.extend(numbered("y", p));
    w.write_record(&header)?;
    for rep in reps {
        let mut evals = 0;
        for r in &rep.log.initial {
            evals += r.repetitions;
            let mut row = vec![
                rep.replicate.to_string(),
                evals.to_string(),
                "0".into(),
                r.index.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ];
            row.extend(nums(&r.f));
            w.write_record(&row)?;
        }
        for r in &rep.log.iterations {
            let mut row = vec![
                rep.replicate.to_string(),
                r.evaluations.to_string(),
                r.iteration.to_string(),
                r.chosen.to_string(),
                r.best_pe_index.to_string(),
                r.best_pe.to_string(),
                opt(r.min_j),
                r.gamma.to_string(),
            ];
            row.extend(nums(&r.f));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Wall time per step; step 0 is the initial design.
pub fn write_timings(path: &Path, reps: &[Replicate]) -> CliResult<()> {
    let mut w = Writer::from_path(path)?;
    w.write_record(["replicate", "step", "seconds", "resumed"])?;
    for rep in reps {
        let first = if rep.resumed { rep.log.iterations.len() + 2 - rep.timings.len() } else { 0 };
        for (k, t) in rep.timings.iter().enumerate() {
            w.write_record([
                rep.replicate.to_string(),
                (first + k).to_string(),
                format!("{:.6}", t.as_secs_f64()),
                rep.resumed.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_logs(dir: &Path, reps: &[Replicate]) -> CliResult<()> {
    for rep in reps {
        let file = File::create(dir.join(format!("replicate-{}.jsonl", rep.replicate)))?;
        rep.log
            .write_jsonl(BufWriter::new(file))
            .map_err(|e| crate::error::CliError::Runtime(e.to_string()))?;
    }
    Ok(())
}

/// One row per start of the fixed-point baseline.
pub fn write_baseline(path: &Path, runs: &[BaselineRun]) -> CliResult<()> {
    let mut w = Writer::from_path(path)?;
    let d = runs.first().map_or(0, |r| r.result.x.len());
    let p = runs.first().map_or(0, |r| r.result.values.len());
    let mut header: Vec<String> = [
        "start",
        "converged",
        "evaluations",
        "iterations",
        "is_equilibrium",
        "check_evaluations",
        "max_improvement",
    ]
    .map(String::from)
    .into();
    header.extend(numbered("start_x", d));
    header.extend(numbered("x", d));
    header.extend(numbered("y", p));
    w.write_record(&header)?;
    for (k, run) in runs.iter().enumerate() {
        let r = &run.result;
        let mut row = vec![
            k.to_string(),
            r.converged.to_string(),
            r.evaluations.to_string(),
            r.iterations.to_string(),
            run.check.is_equilibrium.to_string(),
            run.check.evaluations.to_string(),
            run.check.improvement.iter().copied().fold(0.0_f64, f64::max).to_string(),
        ];
        row.extend(nums(&run.start));
        row.extend(nums(&r.x));
        row.extend(nums(&r.values));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_baseline_jsonl(path: &Path, runs: &[BaselineRun]) -> CliResult<()> {
    let text: String = runs
        .iter()
        .map(|r| serde_json::to_string(r).expect("baseline runs serialize") + "\n")
        .collect();
    fs::write(path, text)?;
    Ok(())
}

fn dims(reps: &[Replicate]) -> (usize, usize) {
    reps.iter()
        .find_map(|r| r.log.initial.first())
        .map_or((0, 0), |r| (r.x.len(), r.f.len()))
}

fn mode_name(rep: &Replicate) -> String {
    enum_name(&rep.log.header.config.acquisition)
}

fn enum_name<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(String::from))
        .unwrap_or_default()
}
