//! Replicated runs with checkpoints and a bounded worker pool.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use gpnash::game::StrategyGrid;
use gpnash::problems::GameProblem;
use gpnash::sequential::{Checkpoint, RunConfig, RunLog, Session};

use crate::error::{CliError, CliResult};

/// Applies `f` to every item on at most `jobs` threads, keeping input order.
pub fn par_map<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync,
{
    let jobs = jobs.clamp(1, items.len().max(1));
    if jobs == 1 {
        return items.iter().enumerate().map(|(k, t)| f(k, t)).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= items.len() {
                    break;
                }
                let r = f(k, &items[k]);
                slots.lock().expect("worker panicked")[k] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("worker panicked")
        .into_iter()
        .map(|r| r.expect("every item is processed"))
        .collect()
}

/// Seed of replicate `r` given the experiment seed.
pub fn replicate_seed(base: u64, replicate: usize) -> u64 {
    base.wrapping_add(replicate as u64)
}

#[derive(Debug, Clone)]
pub struct Replicate {
    pub replicate: usize,
    pub seed: u64,
    pub log: RunLog,
    /// Wall time of the initial design and of each step run in this process.
    pub timings: Vec<Duration>,
    pub resumed: bool,
}

pub fn checkpoint_path(dir: &Path, replicate: usize) -> PathBuf {
    dir.join(format!("replicate-{replicate}.checkpoint.json"))
}

/// Runs one replicate to completion. With a checkpoint directory, state is
/// saved after every step and a matching checkpoint left by an interrupted
/// run is picked up.
pub fn run_replicate(
    problem: &dyn GameProblem,
    grid: &StrategyGrid,
    config: &RunConfig,
    replicate: usize,
    checkpoints: Option<&Path>,
) -> CliResult<Replicate> {
    let context = |e: gpnash::Error| CliError::Runtime(format!("replicate {replicate} (seed {}): {e}", config.seed));
    let path = checkpoints.map(|d| checkpoint_path(d, replicate));
    let saved = path
        .as_deref()
        .filter(|p| p.exists())
        .map(|p| -> CliResult<Checkpoint> {
            let text = fs::read_to_string(p)?;
            Checkpoint::from_json(&text).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display())))
        })
        .transpose()?
        .filter(|cp| cp.log.header.config == *config);
    let resumed = saved.is_some();
    let mut session = match saved {
        Some(cp) => Session::resume(problem, grid, cp).map_err(context)?,
        None => Session::start(problem, grid, config.clone()).map_err(context)?,
    };
    loop {
        if let Some(p) = path.as_deref() {
            save_atomically(p, &session.checkpoint().to_json())?;
        }
        if !session.step().map_err(context)? {
            break;
        }
    }
    if let Some(p) = path.as_deref() {
        fs::remove_file(p)?;
    }
    let timings = session.timings().to_vec();
    Ok(Replicate {
        replicate,
        seed: config.seed,
        log: session.into_log(),
        timings,
        resumed,
    })
}

fn save_atomically(path: &Path, text: &str) -> CliResult<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Runs `replicates` copies of `config` with derived seeds.
pub fn run_replicates(
    problem: &dyn GameProblem,
    grid: &StrategyGrid,
    config: &RunConfig,
    replicates: usize,
    jobs: usize,
    checkpoints: Option<&Path>,
    quiet: bool,
) -> CliResult<Vec<Replicate>> {
    let configs: Vec<RunConfig> = (0..replicates)
        .map(|r| RunConfig {
            seed: replicate_seed(config.seed, r),
            ..config.clone()
        })
        .collect();
    par_map(&configs, jobs, |r, cfg| {
        let out = run_replicate(problem, grid, cfg, r, checkpoints);
        if !quiet {
            if let Ok(rep) = &out {
                if let Some(f) = &rep.log.outcome {
                    eprintln!(
                        "replicate {r}: estimate {} after {} evaluations ({:?})",
                        f.index, f.evaluations, f.stop
                    );
                }
            }
        }
        out
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_map_keeps_order() {
        let items: Vec<usize> = (0..37).collect();
        for jobs in [1, 3, 64] {
            let out = par_map(&items, jobs, |k, v| k * 100 + v);
            assert_eq!(out, items.iter().map(|v| v * 101).collect::<Vec<_>>());
        }
        assert!(par_map(&Vec::<u8>::new(), 4, |_, v| *v).is_empty());
    }
}
