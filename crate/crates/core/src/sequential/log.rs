use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::RunConfig;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub problem: String,
    pub grid_shape: Vec<usize>,
    pub noisy: bool,
    pub config: RunConfig,
}

/// One point of the initial design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialRecord {
    pub index: usize,
    pub x: Vec<f64>,
    pub f: Vec<f64>,
    pub noise_var: Vec<f64>,
    pub repetitions: usize,
}

/// One acquisition step. Criterion values describe the posterior before
/// the chosen point was evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub chosen: usize,
    pub x: Vec<f64>,
    pub f: Vec<f64>,
    pub noise_var: Vec<f64>,
    pub repetitions: usize,
    pub best_pe_index: usize,
    pub best_pe: f64,
    pub min_j: Option<f64>,
    pub gamma: f64,
    pub no_ne_fraction: f64,
    pub n_sim: usize,
    pub n_cand: usize,
    /// Black-box evaluations after this step.
    pub evaluations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Budget,
    Criterion,
    /// No unobserved point is left to evaluate.
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalRecord {
    pub index: usize,
    pub x: Vec<f64>,
    /// Posterior mean at the estimate.
    pub values: Vec<f64>,
    pub observed: Option<Vec<f64>>,
    pub pe: f64,
    pub min_j: Option<f64>,
    pub gamma: f64,
    pub no_ne_fraction: f64,
    pub evaluations: usize,
    pub iterations: usize,
    pub stop: StopReason,
    /// Evaluations after which the estimate no longer changed and, when it
    /// was observed, had been observed.
    pub evaluations_to_convergence: usize,
}

/// One line of the JSONL log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogEntry {
    Header(RunHeader),
    Initial(InitialRecord),
    Iteration(IterationRecord),
    Final(FinalRecord),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub header: RunHeader,
    pub initial: Vec<InitialRecord>,
    pub iterations: Vec<IterationRecord>,
    pub outcome: Option<FinalRecord>,
}

impl RunLog {
    pub fn new(header: RunHeader) -> Self {
        Self {
            header,
            initial: Vec::new(),
            iterations: Vec::new(),
            outcome: None,
        }
    }

    pub fn evaluations(&self) -> usize {
        self.initial.iter().map(|r| r.repetitions).sum::<usize>()
            + self.iterations.iter().map(|r| r.repetitions).sum::<usize>()
    }

    /// Grid indices evaluated so far, in order.
    pub fn design(&self) -> Vec<usize> {
        self.initial
            .iter()
            .map(|r| r.index)
            .chain(self.iterations.iter().map(|r| r.chosen))
            .collect()
    }

    pub fn entries(&self) -> Vec<LogEntry> {
        std::iter::once(LogEntry::Header(self.header.clone()))
            .chain(self.initial.iter().cloned().map(LogEntry::Initial))
            .chain(self.iterations.iter().cloned().map(LogEntry::Iteration))
            .chain(self.outcome.iter().cloned().map(LogEntry::Final))
            .collect()
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for entry in self.entries() {
            serde_json::to_writer(&mut out, &entry)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self> {
        let mut log: Option<RunLog> = None;
        for (n, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: LogEntry = serde_json::from_str(&line)?;
            match (entry, log.as_mut()) {
                (LogEntry::Header(h), None) => log = Some(RunLog::new(h)),
                (LogEntry::Initial(r), Some(l)) if l.iterations.is_empty() => l.initial.push(r),
                (LogEntry::Iteration(r), Some(l)) if l.outcome.is_none() => l.iterations.push(r),
                (LogEntry::Final(r), Some(l)) if l.outcome.is_none() => l.outcome = Some(r),
                _ => return Err(invalid(format!("log line {} is out of order", n + 1))),
            }
        }
        log.ok_or_else(|| invalid("log has no header"))
    }

    /// Objective values observed up to each evaluation, one row per design point.
    pub fn observations(&self) -> Vec<(usize, usize, &[f64])> {
        let mut evals = 0;
        self.initial
            .iter()
            .map(|r| (r.index, r.repetitions, r.f.as_slice()))
            .chain(self.iterations.iter().map(|r| (r.chosen, r.repetitions, r.f.as_slice())))
            .map(|(idx, reps, f)| {
                evals += reps;
                (evals, idx, f)
            })
            .collect()
    }
}

/// `(evaluations at analysis, estimate)` pairs in order, ending with the
/// final analysis.
pub(super) fn convergence_point(log: &RunLog, final_index: usize, final_evals: usize) -> usize {
    let analyses: Vec<(usize, usize)> = log
        .iterations
        .iter()
        .map(|r| (r.evaluations - r.repetitions, r.best_pe_index))
        .chain(std::iter::once((final_evals, final_index)))
        .collect();
    let stable_from = analyses
        .iter()
        .rposition(|&(_, idx)| idx != final_index)
        .map_or(analyses[0].0, |k| analyses[k + 1].0);
    let observed_at = log
        .observations()
        .into_iter()
        .find(|&(_, idx, _)| idx == final_index)
        .map_or(0, |(evals, _, _)| evals);
    stable_from.max(observed_at)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(iteration: usize, chosen: usize, best: usize, evaluations: usize) -> IterationRecord {
        IterationRecord {
            iteration,
            chosen,
            x: vec![0.0],
            f: vec![1.0, 2.0],
            noise_var: vec![0.0, 0.0],
            repetitions: 1,
            best_pe_index: best,
            best_pe: 0.5,
            min_j: None,
            gamma: 0.1,
            no_ne_fraction: 0.0,
            n_sim: 4,
            n_cand: 4,
            evaluations,
            warning: None,
        }
    }

    fn sample_log() -> RunLog {
        let mut log = RunLog::new(RunHeader {
            problem: "p1".into(),
            grid_shape: vec![2, 2],
            noisy: false,
            config: RunConfig::default(),
        });
        for index in [0, 3] {
            log.initial.push(InitialRecord {
                index,
                x: vec![index as f64],
                f: vec![0.1, 1.0 / 3.0],
                noise_var: vec![0.0, 0.0],
                repetitions: 1,
            });
        }
        log.iterations.push(record(1, 1, 0, 3));
        log.iterations.push(record(2, 2, 2, 4));
        log
    }

    #[test]
    fn jsonl_round_trip() {
        let log = sample_log();
        let text = log.to_jsonl();
        assert_eq!(text.lines().count(), 5);
        let back = RunLog::read_jsonl(text.as_bytes()).unwrap();
        assert_eq!(back, log);
        assert_eq!(back.to_jsonl(), text);
    }

    #[test]
    fn out_of_order_lines_are_rejected() {
        let text = sample_log().to_jsonl();
        let mut lines: Vec<&str> = text.lines().collect();
        lines.swap(0, 1);
        assert!(RunLog::read_jsonl(lines.join("\n").as_bytes()).is_err());
    }

    #[test]
    fn convergence_counts_stability_and_observation() {
        let log = sample_log();
        // Estimates: 0 at 2 evals, 2 at 3 evals, final 2 at 4 evals; index 2 observed at 4.
        assert_eq!(convergence_point(&log, 2, 4), 4);
        // Estimate 0 was observed at the start but only stable from the final analysis.
        assert_eq!(convergence_point(&log, 0, 4), 4);
        assert_eq!(log.evaluations(), 4);
        assert_eq!(log.design(), vec![0, 3, 1, 2]);
    }
}
