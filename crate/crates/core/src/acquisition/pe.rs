use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use super::AcquisitionConfig;
use crate::error::{invalid, Result};
use crate::game::{StrategyGrid, SubGrid};
use crate::gp::MultiGp;
use crate::mvn::{mvn_cdf_at_zero_with, mvn_sample, CdfOptions, GaussianSpec};
use crate::util::mix_seed;

const CDF_TAG: u64 = 0xCDF0;
const MC_TAG: u64 = 0x3C3C;

/// Posterior of one player's objective along one of their slices.
struct Slice {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    probs: Vec<Option<f64>>,
}

/// Probability-of-equilibrium evaluator over a factorial (sub-)game.
///
/// `P_i(x)` is the posterior probability that player `i`'s action in `x`
/// minimizes `Y_i` over the player's actions in the sub-game, with the
/// opponents fixed; `P_E = Π_i P_i`. Slice posteriors are cached, so
/// evaluating every point of the sub-game costs one slice computation per
/// player and opponent profile.
pub struct PeEvaluator<'a> {
    multi: &'a MultiGp,
    grid: &'a StrategyGrid,
    sub: SubGrid,
    shape: Vec<usize>,
    strides: Vec<usize>,
    cfg: AcquisitionConfig,
    cache: HashMap<(usize, usize), Slice>,
}

impl<'a> PeEvaluator<'a> {
    pub fn new(multi: &'a MultiGp, grid: &'a StrategyGrid, sub: SubGrid, cfg: &AcquisitionConfig) -> Result<Self> {
        if multi.n_objectives() != grid.n_players() {
            return Err(invalid(format!(
                "{} objective models for {} players",
                multi.n_objectives(),
                grid.n_players()
            )));
        }
        if multi.dim() != grid.dim() {
            return Err(invalid("model and grid dimensions differ"));
        }
        let shape = sub.shape();
        let mut strides = Vec::with_capacity(shape.len());
        let mut s = 1;
        for &m in &shape {
            strides.push(s);
            s *= m;
        }
        Ok(Self {
            multi,
            grid,
            sub,
            shape,
            strides,
            cfg: *cfg,
            cache: HashMap::new(),
        })
    }

    /// Evaluator over the whole grid.
    pub fn full(multi: &'a MultiGp, grid: &'a StrategyGrid, cfg: &AcquisitionConfig) -> Result<Self> {
        Self::new(multi, grid, SubGrid::full(grid), cfg)
    }

    pub fn subgrid(&self) -> &SubGrid {
        &self.sub
    }

    /// `P_E` at a grid point of the sub-game.
    pub fn evaluate(&mut self, index: usize) -> Result<f64> {
        let mut pe = 1.0;
        for player in 0..self.shape.len() {
            pe *= self.player_prob(player, index)?;
            if pe == 0.0 {
                break;
            }
        }
        Ok(pe)
    }

    /// `P_i` at a grid point of the sub-game.
    pub fn player_prob(&mut self, player: usize, index: usize) -> Result<f64> {
        if player >= self.shape.len() {
            return Err(invalid(format!("player {player} out of range")));
        }
        if index >= self.grid.size() {
            return Err(invalid(format!("grid index {index} out of range")));
        }
        let pos = self
            .sub
            .position_of(self.grid, index)
            .ok_or_else(|| invalid(format!("grid index {index} is outside the sub-game")))?;
        let m = self.shape[player];
        if m == 1 {
            return Ok(1.0);
        }
        let stride = self.strides[player];
        let own = (pos / stride) % m;
        let base = pos - own * stride;
        let key = (player, base);
        if !self.cache.contains_key(&key) {
            let slice = self.slice(player, base)?;
            self.cache.insert(key, slice);
        }
        let exact = m - 1 <= self.cfg.cdf_switch;
        let seed = mix_seed(self.cfg.seed, mix_seed(player as u64, base as u64));
        let slice = self.cache.get_mut(&key).expect("inserted above");
        if let Some(p) = slice.probs[own] {
            return Ok(p);
        }
        if exact {
            slice.probs[own] = Some(exact_prob(slice, own, mix_seed(seed, CDF_TAG), self.cfg.cdf_accuracy)?);
        } else {
            let counts = mc_counts(slice, self.cfg.mc_samples, mix_seed(seed, MC_TAG))?;
            let r = self.cfg.mc_samples as f64;
            for (p, c) in slice.probs.iter_mut().zip(counts) {
                *p = Some(c as f64 / r);
            }
        }
        Ok(slice.probs[own].expect("just computed"))
    }

    fn slice(&self, player: usize, base: usize) -> Result<Slice> {
        let m = self.shape[player];
        let stride = self.strides[player];
        let indices: Vec<usize> = (0..m)
            .map(|k| self.sub.parent_index(self.grid, base + k * stride))
            .collect();
        let pts = self.grid.points(&indices);
        let model = &self.multi.models()[player];
        let basis = model.basis(&pts)?;
        let (mean, _) = model.moments(&basis);
        let cov = model.cov_self(&basis);
        Ok(Slice {
            mean,
            cov,
            probs: vec![None; m],
        })
    }
}

/// `P(Y_l ≤ Y_j ∀ j ≠ l)` through the CDF of `Z_j = Y_l − Y_j`.
fn exact_prob(slice: &Slice, l: usize, seed: u64, accuracy: f64) -> Result<f64> {
    let m = slice.mean.len();
    let others: Vec<usize> = (0..m).filter(|&j| j != l).collect();
    let c = &slice.cov;
    let mean = DVector::from_iterator(others.len(), others.iter().map(|&j| slice.mean[l] - slice.mean[j]));
    let cov = DMatrix::from_fn(others.len(), others.len(), |a, b| {
        let (j, k) = (others[a], others[b]);
        c[(l, l)] + c[(j, k)] - c[(l, j)] - c[(l, k)]
    });
    let spec = GaussianSpec::new(mean, cov)?;
    let est = mvn_cdf_at_zero_with(
        &spec,
        &CdfOptions {
            accuracy,
            seed,
            ..CdfOptions::default()
        },
    )?;
    Ok(est.value)
}

/// How often each action is the minimizer among `r` joint slice draws.
fn mc_counts(slice: &Slice, r: usize, seed: u64) -> Result<Vec<usize>> {
    let spec = GaussianSpec::new(slice.mean.clone(), slice.cov.clone())?;
    let draws = mvn_sample(&spec, r, seed)?;
    let mut counts = vec![0usize; slice.mean.len()];
    for row in draws.row_iter() {
        let (best, _) = row
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (k, &v)| if v < acc.1 { (k, v) } else { acc });
        counts[best] += 1;
    }
    Ok(counts)
}

/// `P_E` at one grid point, over the full grid.
pub fn prob_equilibrium(
    multi: &MultiGp,
    grid: &StrategyGrid,
    index: usize,
    cfg: &AcquisitionConfig,
) -> Result<f64> {
    PeEvaluator::full(multi, grid, cfg)?.evaluate(index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::{GpModel, Kernel, KernelFamily};

    fn flat_model(points: &DMatrix<f64>, values: &[f64], noise: f64) -> GpModel {
        GpModel::condition(
            Kernel::new(KernelFamily::SquaredExponential, vec![1e-3; points.ncols()], 1.0),
            points.clone(),
            DVector::from_column_slice(values),
            DVector::from_element(values.len(), noise),
        )
        .unwrap()
    }

    #[test]
    fn single_player_symmetric_pair_is_half() {
        // Tiny lengthscale: the two actions are independent with equal means.
        let grid = StrategyGrid::from_scalar_actions(&[vec![0.0, 1.0]]).unwrap();
        let pts = DMatrix::from_column_slice(1, 1, &[5.0]);
        let multi = MultiGp::new(vec![flat_model(&pts, &[0.0], 0.0)]).unwrap();
        let p = prob_equilibrium(&multi, &grid, 0, &AcquisitionConfig::default()).unwrap();
        assert!((p - 0.5).abs() < 1e-3, "{p}");
    }

    #[test]
    fn certain_posterior_concentrates_on_the_equilibrium() {
        let grid = StrategyGrid::from_scalar_actions(&[vec![0.0, 1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        let coords = grid.points(&(0..grid.size()).collect::<Vec<_>>());
        // Player 0 prefers action 1; player 1 prefers action 0.
        let y0: Vec<f64> = (0..6).map(|k| (grid.tuple(k)[0] as f64 - 1.0).powi(2)).collect();
        let y1: Vec<f64> = (0..6).map(|k| grid.tuple(k)[1] as f64).collect();
        let multi = MultiGp::new(vec![
            flat_model(&coords, &y0, 1e-8),
            flat_model(&coords, &y1, 1e-8),
        ])
        .unwrap();
        let cfg = AcquisitionConfig::default();
        let ne = grid.flat(&[1, 0]).unwrap();
        assert!(prob_equilibrium(&multi, &grid, ne, &cfg).unwrap() >= 0.99);
        let other = grid.flat(&[2, 0]).unwrap();
        assert!(prob_equilibrium(&multi, &grid, other, &cfg).unwrap() < 1e-3);
    }

    #[test]
    fn outside_the_subgame_is_invalid() {
        let grid = StrategyGrid::from_scalar_actions(&[vec![0.0, 1.0, 2.0]]).unwrap();
        let pts = DMatrix::from_column_slice(1, 1, &[5.0]);
        let multi = MultiGp::new(vec![flat_model(&pts, &[0.0], 0.0)]).unwrap();
        let sub = grid.subgrid(vec![vec![0, 1]]).unwrap();
        let mut pe = PeEvaluator::new(&multi, &grid, sub, &AcquisitionConfig::default()).unwrap();
        assert!(pe.evaluate(2).is_err());
        assert!((pe.evaluate(0).unwrap() - 0.5).abs() < 1e-3);
    }
}
