use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::game::{StrategyGrid, SubGrid};
use crate::gp::MultiGp;
use crate::util::{norm_cdf, norm_pdf, rng_from};

const SD_FLOOR: f64 = 1e-12;

/// A target objective vector and a box around the expected equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumTarget {
    pub target: Vec<f64>,
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

impl EquilibriumTarget {
    pub fn new(target: Vec<f64>, low: Vec<f64>, high: Vec<f64>) -> Result<Self> {
        if target.len() != low.len() || low.len() != high.len() {
            return Err(invalid("target and box bounds differ in length"));
        }
        if low.iter().zip(&high).any(|(l, h)| !(l <= h)) {
            return Err(invalid("box lower corner must not exceed the upper corner"));
        }
        Ok(Self { target, low, high })
    }

    /// Degenerate box at a single target vector.
    pub fn point(target: Vec<f64>) -> Self {
        Self {
            low: target.clone(),
            high: target.clone(),
            target,
        }
    }

    /// Bounding box of a cloud of points, with its center as target.
    pub fn bounding(points: &[Vec<f64>]) -> Result<Self> {
        let first = points.first().ok_or_else(|| invalid("no points to bound"))?;
        let mut low = first.clone();
        let mut high = first.clone();
        for pt in points {
            for (i, v) in pt.iter().enumerate() {
                low[i] = low[i].min(*v);
                high[i] = high[i].max(*v);
            }
        }
        let target = low.iter().zip(&high).map(|(l, h)| 0.5 * (l + h)).collect();
        Self::new(target, low, high)
    }
}

/// `Π_i φ((T_i − μ_i) / σ_i)`.
pub fn target_score(mean: &[f64], var: &[f64], target: &[f64]) -> f64 {
    mean.iter()
        .zip(var)
        .zip(target)
        .map(|((m, v), t)| norm_pdf((t - m) / v.sqrt().max(SD_FLOOR)))
        .product()
}

/// `Π_i [Φ((U_i − μ_i) / σ_i) − Φ((L_i − μ_i) / σ_i)]`.
pub fn box_score(mean: &[f64], var: &[f64], low: &[f64], high: &[f64]) -> f64 {
    mean.iter()
        .zip(var)
        .zip(low.iter().zip(high))
        .map(|((m, v), (l, h))| {
            let sd = v.sqrt().max(SD_FLOOR);
            (norm_cdf((h - m) / sd) - norm_cdf((l - m) / sd)).max(0.0)
        })
        .product()
}

fn posterior_at(multi: &MultiGp, grid: &StrategyGrid, index: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if index >= grid.size() {
        return Err(invalid(format!("grid index {index} out of range")));
    }
    let (mu, var) = multi.predict(&grid.points(&[index]))?;
    Ok((mu.row(0).iter().copied().collect(), var.row(0).iter().copied().collect()))
}

pub fn score_target(multi: &MultiGp, grid: &StrategyGrid, index: usize, target: &[f64]) -> Result<f64> {
    if target.len() != multi.n_objectives() {
        return Err(invalid("target length differs from the number of objectives"));
    }
    let (mu, var) = posterior_at(multi, grid, index)?;
    Ok(target_score(&mu, &var, target))
}

pub fn score_box(
    multi: &MultiGp,
    grid: &StrategyGrid,
    index: usize,
    low: &[f64],
    high: &[f64],
) -> Result<f64> {
    let p = multi.n_objectives();
    if low.len() != p || high.len() != p {
        return Err(invalid("box bounds differ from the number of objectives"));
    }
    let (mu, var) = posterior_at(multi, grid, index)?;
    Ok(box_score(&mu, &var, low, high))
}

/// Smallest `s` with `s^p ≥ n`.
fn per_player_size(n: usize, p: usize) -> usize {
    let mut s = (n as f64).powf(1.0 / p as f64).floor().max(1.0) as usize;
    while (s as u128).pow(p as u32) < n as u128 {
        s += 1;
    }
    s
}

/// Draws a factorial sub-grid with about `target_size` points.
///
/// Each action gets the mean score of the grid points that use it. Per
/// player, the top action is kept and the remaining slots are filled by
/// successive sampling without replacement with probability proportional to
/// that marginal score (uniformly once only zero-score actions remain).
pub fn select_subset(grid: &StrategyGrid, scores: &[f64], target_size: usize, seed: u64) -> Result<SubGrid> {
    if scores.len() != grid.size() {
        return Err(invalid(format!(
            "{} scores for a grid of {} points",
            scores.len(),
            grid.size()
        )));
    }
    if scores.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(invalid("scores must be finite and nonnegative"));
    }
    if scores.iter().all(|&s| s == 0.0) {
        return Err(invalid("all scores are zero"));
    }
    if target_size >= grid.size() {
        return Ok(SubGrid::full(grid));
    }
    let shape = grid.shape();
    let p = shape.len();
    let mut marginals: Vec<Vec<f64>> = shape.iter().map(|&m| vec![0.0; m]).collect();
    let mut stride = 1;
    for (i, &m) in shape.iter().enumerate() {
        for (k, s) in scores.iter().enumerate() {
            marginals[i][(k / stride) % m] += s;
        }
        let per_action = (grid.size() / m) as f64;
        marginals[i].iter_mut().for_each(|v| *v /= per_action);
        stride *= m;
    }
    let size = per_player_size(target_size.max(1), p);
    let mut rng = rng_from(seed, &[]);
    let selection = marginals
        .iter()
        .map(|w| sample_actions(w, size.min(w.len()), &mut rng))
        .collect();
    grid.subgrid(selection)
}

fn sample_actions<R: Rng>(weights: &[f64], count: usize, rng: &mut R) -> Vec<usize> {
    let top = weights
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (k, &w)| if w > acc.1 { (k, w) } else { acc })
        .0;
    let mut chosen = vec![top];
    let mut remaining: Vec<usize> = (0..weights.len()).filter(|&k| k != top).collect();
    while chosen.len() < count {
        let total: f64 = remaining.iter().map(|&k| weights[k]).sum();
        let pos = if total > 0.0 {
            let u = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (pos, &k) in remaining.iter().enumerate() {
                if weights[k] > 0.0 {
                    acc += weights[k];
                    pick = Some(pos);
                    if u < acc {
                        break;
                    }
                }
            }
            pick.expect("positive total weight")
        } else {
            rng.random_range(0..remaining.len())
        };
        chosen.push(remaining.swap_remove(pos));
    }
    chosen.sort_unstable();
    chosen
}
