use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::log::convergence_point;
use super::{
    initial_design, should_stop, Acquisition, FinalRecord, InitialRecord, IterationRecord, RunConfig, RunHeader,
    RunLog, StopReason,
};
use crate::acquisition::{
    box_score, select_subset, simulated_equilibria, target_score, AcquisitionConfig, EquilibriumTarget, PeEvaluator,
    SurEvaluator,
};
use crate::error::{invalid, Error, Result};
use crate::game::{nash_extract, PayoffTensor, StrategyGrid, SubGrid};
use crate::gp::{simulate_paths, FitConfig, Hyperparameters, MultiGp, NoiseModel};
use crate::problems::GameProblem;
use crate::util::{mix_seed, rng_from};

const FIT_TAG: u64 = 0xF17;
const SIM_TAG: u64 = 0x515;
const CAND_TAG: u64 = 0xCA4D;
const PATH_TAG: u64 = 0x9A7;
const PE_TAG: u64 = 0x9E;
const SUR_TAG: u64 = 0x5A2;
const NOISE_TAG: u64 = 0x401;
const NO_NE_PATIENCE: usize = 3;
const CHECKPOINT_VERSION: u32 = 1;

/// State carried from one iteration to the next.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Carry {
    warm: Option<Vec<Hyperparameters>>,
    /// Box spanned by the last simulated equilibria.
    ne_box: Option<(Vec<f64>, Vec<f64>)>,
    incumbent: Option<usize>,
    no_ne_streak: usize,
}

/// Everything needed to continue a run where it stopped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub log: RunLog,
    carry: Carry,
}

impl Checkpoint {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cp: Self = serde_json::from_str(text)?;
        if cp.version != CHECKPOINT_VERSION {
            return Err(invalid(format!("unsupported checkpoint version {}", cp.version)));
        }
        Ok(cp)
    }
}

/// Outcome of one posterior analysis.
struct Analysis {
    multi: MultiGp,
    means: DMatrix<f64>,
    cand: Vec<usize>,
    cand_pe: Vec<f64>,
    best: (usize, f64),
    choice: Option<usize>,
    min_j: Option<f64>,
    gamma: f64,
    no_ne_fraction: f64,
    ne_box: Option<(Vec<f64>, Vec<f64>)>,
    n_sim: usize,
}

/// A run in progress. [`Session::step`] performs one analysis and, unless
/// the run ends, one evaluation.
pub struct Session<'a> {
    problem: &'a dyn GameProblem,
    grid: &'a StrategyGrid,
    config: RunConfig,
    log: RunLog,
    carry: Carry,
    timings: Vec<Duration>,
}

impl<'a> Session<'a> {
    /// Validates the setup and evaluates the initial design.
    pub fn start(problem: &'a dyn GameProblem, grid: &'a StrategyGrid, config: RunConfig) -> Result<Self> {
        config.validate()?;
        check_compatible(problem, grid)?;
        let noisy = problem.noise_sd(&grid.point(0)).is_some();
        let header = RunHeader {
            problem: problem.name(),
            grid_shape: grid.shape(),
            noisy,
            config: config.clone(),
        };
        let mut session = Self {
            problem,
            grid,
            config,
            log: RunLog::new(header),
            carry: Carry {
                warm: None,
                ne_box: None,
                incumbent: None,
                no_ne_streak: 0,
            },
            timings: Vec::new(),
        };
        let started = Instant::now();
        for index in initial_design(grid, session.config.n0, session.config.seed)? {
            let (x, f, noise_var, repetitions) = session.observe(index)?;
            session.log.initial.push(InitialRecord {
                index,
                x,
                f,
                noise_var,
                repetitions,
            });
        }
        session.timings.push(started.elapsed());
        Ok(session)
    }

    pub fn resume(problem: &'a dyn GameProblem, grid: &'a StrategyGrid, checkpoint: Checkpoint) -> Result<Self> {
        check_compatible(problem, grid)?;
        let header = &checkpoint.log.header;
        if header.grid_shape != grid.shape() || header.problem != problem.name() {
            return Err(invalid("checkpoint belongs to a different problem or grid"));
        }
        header.config.validate()?;
        Ok(Self {
            problem,
            grid,
            config: header.config.clone(),
            log: checkpoint.log,
            carry: checkpoint.carry,
            timings: Vec::new(),
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            log: self.log.clone(),
            carry: self.carry.clone(),
        }
    }

    pub fn log(&self) -> &RunLog {
        &self.log
    }

    pub fn into_log(self) -> RunLog {
        self.log
    }

    /// Wall time of the initial design and of each step since the session
    /// was created.
    pub fn timings(&self) -> &[Duration] {
        &self.timings
    }

    pub fn is_finished(&self) -> bool {
        self.log.outcome.is_some()
    }

    /// Returns `false` once the run has ended.
    pub fn step(&mut self) -> Result<bool> {
        if self.is_finished() {
            return Ok(false);
        }
        let started = Instant::now();
        let iteration = self.log.iterations.len() + 1;
        let a = self.analyse(iteration)?;
        let points = self.log.initial.len() + self.log.iterations.len();
        let min_j = match a.min_j {
            Some(j) if a.no_ne_fraction < 0.5 => j,
            _ => f64::INFINITY,
        };
        let stop = if points >= self.config.n_max {
            Some(StopReason::Budget)
        } else if should_stop(self.config.acquisition, a.best.1, min_j, self.config.stop_eps) {
            Some(StopReason::Criterion)
        } else if a.choice.is_none() {
            Some(StopReason::Exhausted)
        } else {
            None
        };
        if let Some(reason) = stop {
            self.finish(&a, reason);
            self.timings.push(started.elapsed());
            return Ok(false);
        }
        let chosen = a.choice.expect("checked above");
        let (x, f, noise_var, repetitions) = self.observe(chosen)?;
        self.carry.no_ne_streak = if a.no_ne_fraction >= 1.0 {
            self.carry.no_ne_streak + 1
        } else {
            0
        };
        let warning = (self.carry.no_ne_streak >= NO_NE_PATIENCE).then(|| {
            format!(
                "no simulated draw had a pure equilibrium for {} consecutive iterations",
                self.carry.no_ne_streak
            )
        });
        self.log.iterations.push(IterationRecord {
            iteration,
            chosen,
            x,
            f,
            noise_var,
            repetitions,
            best_pe_index: a.best.0,
            best_pe: a.best.1,
            min_j: a.min_j,
            gamma: a.gamma,
            no_ne_fraction: a.no_ne_fraction,
            n_sim: a.n_sim,
            n_cand: a.cand.len(),
            evaluations: self.log.evaluations() + repetitions,
            warning,
        });
        self.carry.warm = Some(a.multi.models().iter().map(|m| m.hyperparameters()).collect());
        self.carry.ne_box = a.ne_box;
        self.carry.incumbent = Some(a.best.0);
        self.timings.push(started.elapsed());
        Ok(true)
    }

    fn finish(&mut self, a: &Analysis, stop: StopReason) {
        let (index, pe) = a.best;
        debug_assert!(a.cand.contains(&index));
        debug_assert!(a.cand_pe.iter().all(|&v| v <= pe));
        let evaluations = self.log.evaluations();
        let observed = self
            .log
            .observations()
            .into_iter()
            .rev()
            .find(|&(_, idx, _)| idx == index)
            .map(|(_, _, f)| f.to_vec());
        self.log.outcome = Some(FinalRecord {
            index,
            x: self.grid.point(index),
            values: a.means.row(index).iter().copied().collect(),
            observed,
            pe,
            min_j: a.min_j,
            gamma: a.gamma,
            no_ne_fraction: a.no_ne_fraction,
            evaluations,
            iterations: self.log.iterations.len(),
            stop,
            evaluations_to_convergence: convergence_point(&self.log, index, evaluations),
        });
    }

    fn noisy(&self) -> bool {
        self.log.header.noisy
    }

    /// Evaluates the problem at a grid point; on noisy problems the result
    /// is the mean of the repetitions with its estimated variance.
    fn observe(&mut self, index: usize) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, usize)> {
        let x = self.grid.point(index);
        let y = self.problem.evaluate(&x)?;
        if y.len() != self.grid.n_players() || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Evaluation {
                x,
                message: format!("expected {} finite costs, got {y:?}", self.grid.n_players()),
            });
        }
        let Some(sd) = self.problem.noise_sd(&x) else {
            let p = y.len();
            return Ok((x, y, vec![0.0; p], 1));
        };
        let reps = self.config.repetitions_per_point;
        let call = self.log.evaluations() as u64;
        let mut rng = rng_from(self.config.seed, &[NOISE_TAG, call]);
        let draws: Vec<Vec<f64>> = (0..reps)
            .map(|_| {
                y.iter()
                    .zip(&sd)
                    .map(|(v, s)| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        v + s * z
                    })
                    .collect()
            })
            .collect();
        let r = reps as f64;
        let mean: Vec<f64> = (0..y.len()).map(|i| draws.iter().map(|d| d[i]).sum::<f64>() / r).collect();
        // A single repetition leaves the noise level to the model fit.
        let var: Vec<f64> = if reps < 2 {
            Vec::new()
        } else {
            (0..y.len())
                .map(|i| draws.iter().map(|d| (d[i] - mean[i]).powi(2)).sum::<f64>() / (r - 1.0) / r)
                .collect()
        };
        Ok((x, mean, var, reps))
    }

    fn fit(&self, iteration: usize) -> Result<MultiGp> {
        let records: Vec<(usize, &[f64], &[f64])> = self
            .log
            .initial
            .iter()
            .map(|r| (r.index, r.f.as_slice(), r.noise_var.as_slice()))
            .chain(
                self.log
                    .iterations
                    .iter()
                    .map(|r| (r.chosen, r.f.as_slice(), r.noise_var.as_slice())),
            )
            .collect();
        let p = self.grid.n_players();
        let indices: Vec<usize> = records.iter().map(|r| r.0).collect();
        let inputs = self.grid.points(&indices);
        let outputs = DMatrix::from_fn(records.len(), p, |k, i| records[k].1[i]);
        let noise: Vec<NoiseModel> = (0..p)
            .map(|i| {
                if records.iter().any(|r| r.2.is_empty()) {
                    NoiseModel::Estimated
                } else {
                    NoiseModel::Fixed(records.iter().map(|r| r.2[i]).collect())
                }
            })
            .collect();
        let cfg = FitConfig {
            restarts: self.config.fit_restarts,
            seed: mix_seed(self.config.seed, mix_seed(FIT_TAG, iteration as u64)),
            input_bounds: Some(self.problem.bounds()),
            ..FitConfig::default()
        };
        MultiGp::fit(&inputs, &outputs, &noise, self.config.kernel, &cfg, self.carry.warm.as_deref())
    }

    /// Noise variance assumed for a new observation when scoring candidates.
    fn candidate_noise(&self, multi: &MultiGp) -> Vec<f64> {
        if !self.noisy() {
            return vec![0.0; self.grid.n_players()];
        }
        multi
            .models()
            .iter()
            .map(|m| {
                m.estimated_noise_var().unwrap_or_else(|| {
                    let v = m.noise_vars();
                    v.iter().sum::<f64>() / v.len() as f64
                })
            })
            .collect()
    }

    fn analyse(&self, iteration: usize) -> Result<Analysis> {
        let seed = |tag: u64| mix_seed(self.config.seed, mix_seed(tag, iteration as u64));
        let grid = self.grid;
        let cfg = &self.config.cfg;
        let multi = self.fit(iteration)?;
        let all: Vec<usize> = (0..grid.size()).collect();
        let (means, vars) = multi.predict(&grid.points(&all))?;

        let mean_ne = nash_extract(&PayoffTensor::from_grid(grid, means.clone())?);
        let row = |k: usize, m: &DMatrix<f64>| -> Vec<f64> { m.row(k).iter().copied().collect() };
        let target_scores = |target: &[f64]| -> Vec<f64> {
            all.iter()
                .map(|&k| target_score(&row(k, &means), &row(k, &vars), target))
                .collect()
        };
        let mut scores = match &self.carry.ne_box {
            Some((low, high)) => all
                .iter()
                .map(|&k| box_score(&row(k, &means), &row(k, &vars), low, high))
                .collect(),
            None => Vec::new(),
        };
        if let Some((low, high)) = &self.carry.ne_box {
            if !has_mass(&scores) {
                let center: Vec<f64> = low.iter().zip(high).map(|(l, h)| 0.5 * (l + h)).collect();
                scores = target_scores(&center);
            }
        }
        if !has_mass(&scores) {
            if let Some(target) = mean_ne.representative() {
                scores = target_scores(&target);
            }
        }
        if !has_mass(&scores) {
            scores = vec![1.0; grid.size()];
        }
        let mut sim = select_subset(grid, &scores, cfg.n_sim, seed(SIM_TAG))?;
        if let Some(&k) = mean_ne.indices.first() {
            sim.include(grid, k);
        }
        if let Some(k) = self.carry.incumbent {
            sim.include(grid, k);
        }

        let sim_indices = sim.parent_indices(grid);
        let shape = sim.shape();
        let ensemble = simulate_paths(&multi, &sim_indices, &grid.points(&sim_indices), cfg.paths, seed(PATH_TAG))?;
        let sims = simulated_equilibria(&ensemble, &shape)?;
        let valid = sims.valid();
        let ne_box = EquilibriumTarget::bounding(&valid).ok().map(|t| (t.low, t.high));

        let pe_cfg = AcquisitionConfig {
            seed: seed(PE_TAG),
            ..*cfg
        };
        let mut pe = PeEvaluator::new(&multi, grid, sim.clone(), &pe_cfg)?;
        let sim_pe = sim_indices
            .iter()
            .map(|&k| pe.evaluate(k))
            .collect::<Result<Vec<f64>>>()?;
        let sim_grid = sim.to_grid(grid);
        let cand_scores = if has_mass(&sim_pe) {
            sim_pe.clone()
        } else {
            vec![1.0; sim_pe.len()]
        };
        let inner = select_subset(&sim_grid, &cand_scores, cfg.n_cand, seed(CAND_TAG))?;
        let cand_sub: SubGrid = sim.restrict(&inner);
        let cand = cand_sub.parent_indices(grid);
        let cand_pe: Vec<f64> = cand
            .iter()
            .map(|&k| sim_pe[sim.position_of(grid, k).expect("candidates lie in the simulation set")])
            .collect();
        let best = argmax(&cand, &cand_pe);

        let observed = self.log.design();
        let open = |k: &usize| self.noisy() || !observed.contains(k);
        let mut pool: Vec<(usize, f64)> = cand.iter().copied().zip(cand_pe.iter().copied()).filter(|(k, _)| open(k)).collect();
        if pool.is_empty() {
            pool = sim_indices
                .iter()
                .copied()
                .zip(sim_pe.iter().copied())
                .filter(|(k, _)| open(k))
                .collect();
        }
        let (choice, min_j) = if pool.is_empty() {
            (None, None)
        } else {
            match self.config.acquisition {
                Acquisition::ProbEquilibrium => {
                    let (k, v): (Vec<usize>, Vec<f64>) = pool.into_iter().unzip();
                    (Some(argmax(&k, &v).0), None)
                }
                Acquisition::Sur => {
                    let noise = self.candidate_noise(&multi);
                    let mut sur = SurEvaluator::new(&multi, &ensemble, &shape, &noise, cfg, seed(SUR_TAG))?;
                    let mut best_j = (pool[0].0, f64::INFINITY);
                    for &(k, _) in &pool {
                        let j = sur.evaluate(&grid.point(k))?;
                        if j < best_j.1 {
                            best_j = (k, j);
                        }
                    }
                    (Some(best_j.0), Some(best_j.1))
                }
            }
        };

        Ok(Analysis {
            means,
            cand,
            cand_pe,
            best,
            choice,
            min_j,
            gamma: sims.gamma(),
            no_ne_fraction: sims.no_ne_fraction(),
            ne_box,
            n_sim: sim_indices.len(),
            multi,
        })
    }
}

fn check_compatible(problem: &dyn GameProblem, grid: &StrategyGrid) -> Result<()> {
    if problem.block_dims() != grid.block_dims() {
        return Err(invalid(format!(
            "problem blocks {:?} differ from grid blocks {:?}",
            problem.block_dims(),
            grid.block_dims()
        )));
    }
    Ok(())
}

fn has_mass(scores: &[f64]) -> bool {
    scores.iter().any(|&s| s > 0.0) && scores.iter().all(|s| s.is_finite())
}

/// First index with the largest value.
fn argmax(indices: &[usize], values: &[f64]) -> (usize, f64) {
    indices
        .iter()
        .zip(values)
        .fold((indices[0], f64::NEG_INFINITY), |best, (&k, &v)| if v > best.1 { (k, v) } else { best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::QuadraticGame;

    fn small_game() -> (QuadraticGame, StrategyGrid) {
        let game = QuadraticGame::separable(&[1, 1], &[0.5, -0.5], 2.0).unwrap();
        let actions = vec![-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0];
        let grid = StrategyGrid::from_scalar_actions(&[actions.clone(), actions]).unwrap();
        (game, grid)
    }

    fn config() -> RunConfig {
        RunConfig {
            n0: 5,
            n_max: 9,
            cfg: AcquisitionConfig {
                paths: 10,
                obs_draws: 5,
                ..AcquisitionConfig::default()
            },
            seed: 11,
            ..RunConfig::default()
        }
    }

    #[test]
    fn evaluation_count_follows_the_budget() {
        let (game, grid) = small_game();
        let log = super::super::run(&game, &grid, &config()).unwrap();
        assert_eq!(log.initial.len(), 5);
        assert_eq!(log.evaluations(), 5 + log.iterations.len());
        assert!(log.evaluations() <= 9);
        let design = log.design();
        let mut unique = design.clone();
        unique.sort_unstable();
        unique.dedup();
        assert_eq!(unique.len(), design.len());
        for (k, r) in log.iterations.iter().enumerate() {
            assert_eq!(r.iteration, k + 1);
        }
    }

    #[test]
    fn checkpoint_round_trip_resumes_identically() {
        let (game, grid) = small_game();
        let cfg = RunConfig {
            acquisition: Acquisition::Sur,
            ..config()
        };
        let full = super::super::run(&game, &grid, &cfg).unwrap();
        let mut s = Session::start(&game, &grid, cfg).unwrap();
        s.step().unwrap();
        s.step().unwrap();
        let text = s.checkpoint().to_json();
        drop(s);
        let mut resumed = Session::resume(&game, &grid, Checkpoint::from_json(&text).unwrap()).unwrap();
        while resumed.step().unwrap() {}
        assert_eq!(resumed.into_log().to_jsonl(), full.to_jsonl());
    }

    #[test]
    fn noisy_observations_average_repetitions() {
        let (game, grid) = small_game();
        let game = game.with_noise(vec![0.05, 0.05]).unwrap();
        let cfg = RunConfig {
            repetitions_per_point: 4,
            ..config()
        };
        let log = super::super::run(&game, &grid, &cfg).unwrap();
        assert!(log.header.noisy);
        assert_eq!(log.evaluations(), 4 * (5 + log.iterations.len()));
        assert!(log.initial.iter().all(|r| r.noise_var.iter().all(|v| *v > 0.0)));
    }
}
