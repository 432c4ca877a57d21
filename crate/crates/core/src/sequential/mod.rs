//! The sequential design loop: initial design, acquisition, stopping and
//! the final equilibrium estimate.

mod log;
mod session;

pub use log::{FinalRecord, InitialRecord, IterationRecord, LogEntry, RunHeader, RunLog, StopReason};
pub use session::{Checkpoint, Session};

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::acquisition::AcquisitionConfig;
use crate::design::{maximin_lhd, DEFAULT_LHD_TRIES};
use crate::error::{invalid, Result};
use crate::game::StrategyGrid;
use crate::gp::KernelFamily;
use crate::problems::GameProblem;
use crate::util::{mix_seed, rng_from};

const DESIGN_TAG: u64 = 0xDE51;
const MAX_REDRAWS: usize = 100;

/// Which acquisition function picks the next point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Acquisition {
    #[default]
    ProbEquilibrium,
    Sur,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n0: usize,
    /// Budget in design points (each costs `repetitions_per_point`
    /// evaluations on noisy problems).
    pub n_max: usize,
    pub acquisition: Acquisition,
    pub cfg: AcquisitionConfig,
    /// `0` disables early stopping.
    pub stop_eps: f64,
    pub seed: u64,
    pub repetitions_per_point: usize,
    pub kernel: KernelFamily,
    pub fit_restarts: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n0: 6,
            n_max: 30,
            acquisition: Acquisition::default(),
            cfg: AcquisitionConfig::default(),
            stop_eps: 0.0,
            seed: 0,
            repetitions_per_point: 1,
            kernel: KernelFamily::default(),
            fit_restarts: 5,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n0 < 2 {
            return Err(invalid("n0 must be at least 2"));
        }
        if self.n0 >= self.n_max {
            return Err(invalid(format!("n0 = {} must be below n_max = {}", self.n0, self.n_max)));
        }
        if self.repetitions_per_point == 0 {
            return Err(invalid("repetitions_per_point must be at least 1"));
        }
        if !(self.stop_eps >= 0.0) {
            return Err(invalid("stop_eps must be nonnegative"));
        }
        self.cfg.validate()
    }
}

/// Early-stopping rule; `stop_eps = 0` never fires.
pub fn should_stop(mode: Acquisition, best_pe: f64, min_j: f64, stop_eps: f64) -> bool {
    if stop_eps <= 0.0 {
        return false;
    }
    match mode {
        Acquisition::ProbEquilibrium => best_pe >= 1.0 - stop_eps,
        Acquisition::Sur => min_j <= stop_eps,
    }
}

/// `n0` distinct grid indices from a maximin Latin hypercube.
///
/// Samples live in `[0,1]^d` and are mapped to the grid point whose
/// rescaled blocks are nearest; a sample that lands on an index already
/// taken is replaced by a uniform redraw.
pub fn initial_design(grid: &StrategyGrid, n0: usize, seed: u64) -> Result<Vec<usize>> {
    let n = grid.size();
    if n0 > n {
        return Err(invalid(format!("initial design of {n0} points on a grid of {n}")));
    }
    if n0 == n {
        return Ok((0..n).collect());
    }
    let d = grid.dim();
    let unit = maximin_lhd(n0, d, DEFAULT_LHD_TRIES, mix_seed(seed, DESIGN_TAG));
    let scaled = scaled_actions(grid);
    let mut rng = rng_from(seed, &[DESIGN_TAG, 1]);
    let mut taken = HashSet::with_capacity(n0);
    let mut design = Vec::with_capacity(n0);
    for row in unit.row_iter() {
        let mut u: Vec<f64> = row.iter().copied().collect();
        let mut redraws = 0;
        loop {
            let idx = nearest_scaled(grid, &scaled, &u);
            if taken.insert(idx) {
                design.push(idx);
                break;
            }
            redraws += 1;
            if redraws > MAX_REDRAWS {
                let free: Vec<usize> = (0..n).filter(|k| !taken.contains(k)).collect();
                let idx = free[rng.random_range(0..free.len())];
                taken.insert(idx);
                design.push(idx);
                break;
            }
            u.iter_mut().for_each(|v| *v = rng.random());
        }
    }
    Ok(design)
}

/// Per player, actions rescaled to `[0,1]` along each coordinate.
fn scaled_actions(grid: &StrategyGrid) -> Vec<Vec<Vec<f64>>> {
    let bounds = grid.bounds();
    let mut offset = 0;
    (0..grid.n_players())
        .map(|i| {
            let a = grid.actions(i);
            let b = &bounds[offset..offset + a.ncols()];
            offset += a.ncols();
            a.row_iter()
                .map(|r| {
                    r.iter()
                        .zip(b)
                        .map(|(v, (lo, hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.5 })
                        .collect()
                })
                .collect()
        })
        .collect()
}

fn nearest_scaled(grid: &StrategyGrid, scaled: &[Vec<Vec<f64>>], u: &[f64]) -> usize {
    let mut offset = 0;
    let tuple: Vec<usize> = scaled
        .iter()
        .map(|actions| {
            let di = actions[0].len();
            let target = &u[offset..offset + di];
            offset += di;
            actions
                .iter()
                .enumerate()
                .map(|(k, a)| (k, a.iter().zip(target).map(|(x, y)| (x - y).powi(2)).sum::<f64>()))
                .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
                .0
        })
        .collect();
    grid.flat(&tuple).expect("nearest actions are in range")
}

/// Runs the loop to completion.
pub fn run(problem: &dyn GameProblem, grid: &StrategyGrid, config: &RunConfig) -> Result<RunLog> {
    let mut session = Session::start(problem, grid, config.clone())?;
    while session.step()? {}
    Ok(session.into_log())
}
