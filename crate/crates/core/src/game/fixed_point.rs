//! Relaxed best-response iteration on a continuous box.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixedPointConfig {
    /// Relaxation factor in (0, 1).
    pub alpha: f64,
    pub k_max: usize,
    /// Outer stopping tolerance on `‖x⁽ᵏ⁺¹⁾ − x⁽ᵏ⁾‖`.
    pub tol: f64,
    pub inner_max_iter: usize,
    /// Finite-difference step as a fraction of the box width.
    pub fd_rel_step: f64,
    /// Inner stopping tolerance on the step length, relative to the box width.
    pub inner_tol: f64,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            k_max: 100,
            tol: 1e-3,
            inner_max_iter: 50,
            fd_rel_step: 1e-6,
            inner_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointResult {
    pub x: Vec<f64>,
    /// Objective vector at `x`.
    pub values: Vec<f64>,
    /// Every objective call, finite-difference probes included.
    pub evaluations: usize,
    pub iterations: usize,
    pub converged: bool,
}

struct Counted<F> {
    f: F,
    calls: usize,
    iteration: usize,
}

impl<F: FnMut(&[f64]) -> Result<Vec<f64>>> Counted<F> {
    fn call(&mut self, x: &[f64], p: usize) -> Result<Vec<f64>> {
        self.calls += 1;
        let y = (self.f)(x).map_err(|e| match e {
            Error::Evaluation { x, message } => Error::Evaluation {
                x,
                message: format!("{message} (outer iteration {})", self.iteration),
            },
            other => other,
        })?;
        if y.len() != p || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Evaluation {
                x: x.to_vec(),
                message: format!(
                    "objective returned {y:?} at outer iteration {}",
                    self.iteration
                ),
            });
        }
        Ok(y)
    }

    /// Objective `i` with block `range` of `x` replaced by `u`.
    fn block(&mut self, x: &[f64], range: std::ops::Range<usize>, u: &[f64], i: usize, p: usize) -> Result<f64> {
        let mut full = x.to_vec();
        full[range].copy_from_slice(u);
        Ok(self.call(&full, p)?[i])
    }
}

fn block_ranges(block_dims: &[usize]) -> Vec<std::ops::Range<usize>> {
    let mut start = 0;
    block_dims
        .iter()
        .map(|&d| {
            let r = start..start + d;
            start += d;
            r
        })
        .collect()
}

/// Runs the relaxed fixed-point iteration from `start`.
///
/// Each outer step minimizes every player's objective over their own block
/// (projected gradient descent with central finite differences and
/// backtracking), then moves `x` a fraction `alpha` towards the result.
pub fn fixed_point_solve<F>(
    objective: F,
    bounds: &[(f64, f64)],
    block_dims: &[usize],
    start: &[f64],
    cfg: &FixedPointConfig,
) -> Result<FixedPointResult>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let d: usize = block_dims.iter().sum();
    let p = block_dims.len();
    if bounds.len() != d || start.len() != d {
        return Err(invalid(format!(
            "bounds ({}) and start ({}) must match the dimension {d}",
            bounds.len(),
            start.len()
        )));
    }
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(invalid("relaxation factor must lie in (0, 1)"));
    }
    if bounds.iter().any(|(lo, hi)| !(lo <= hi)) {
        return Err(invalid("every lower bound must not exceed its upper bound"));
    }
    let mut x: Vec<f64> = start
        .iter()
        .zip(bounds)
        .map(|(v, (lo, hi))| v.clamp(*lo, *hi))
        .collect();
    if cfg.k_max == 0 {
        return Ok(FixedPointResult {
            x,
            values: Vec::new(),
            evaluations: 0,
            iterations: 0,
            converged: false,
        });
    }
    let ranges = block_ranges(block_dims);
    let mut f = Counted {
        f: objective,
        calls: 0,
        iteration: 0,
    };
    let mut converged = false;
    let mut iterations = 0;
    for k in 0..cfg.k_max {
        f.iteration = k;
        iterations = k + 1;
        let mut z = x.clone();
        for (i, range) in ranges.iter().enumerate() {
            let u = minimize_block(&mut f, &x, range.clone(), &bounds[range.clone()], i, p, cfg)?;
            z[range.clone()].copy_from_slice(&u);
        }
        let next: Vec<f64> = z
            .iter()
            .zip(&x)
            .map(|(zi, xi)| cfg.alpha * zi + (1.0 - cfg.alpha) * xi)
            .collect();
        let step = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        x = next;
        if step <= cfg.tol {
            converged = true;
            break;
        }
    }
    let values = f.call(&x, p)?;
    Ok(FixedPointResult {
        x,
        values,
        evaluations: f.calls,
        iterations,
        converged,
    })
}

fn minimize_block<F>(
    f: &mut Counted<F>,
    x: &[f64],
    range: std::ops::Range<usize>,
    bounds: &[(f64, f64)],
    player: usize,
    p: usize,
    cfg: &FixedPointConfig,
) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let widths: Vec<f64> = bounds.iter().map(|(lo, hi)| hi - lo).collect();
    let scale = widths.iter().map(|w| w * w).sum::<f64>().sqrt();
    let project = |u: &mut [f64]| {
        for (v, (lo, hi)) in u.iter_mut().zip(bounds) {
            *v = v.clamp(*lo, *hi);
        }
    };
    let mut u = x[range.clone()].to_vec();
    let mut fu = f.block(x, range.clone(), &u, player, p)?;
    let mut step = None;
    for _ in 0..cfg.inner_max_iter {
        let mut grad = vec![0.0; u.len()];
        for j in 0..u.len() {
            let h = (cfg.fd_rel_step * widths[j]).max(f64::EPSILON);
            let (lo, hi) = bounds[j];
            let mut up = u.clone();
            up[j] = (u[j] + h).min(hi);
            let mut down = u.clone();
            down[j] = (u[j] - h).max(lo);
            if up[j] == down[j] {
                continue;
            }
            let fp = f.block(x, range.clone(), &up, player, p)?;
            let fm = f.block(x, range.clone(), &down, player, p)?;
            grad[j] = (fp - fm) / (up[j] - down[j]);
        }
        // Drop components that push against an active bound.
        for (j, g) in grad.iter_mut().enumerate() {
            let (lo, hi) = bounds[j];
            if (u[j] <= lo && *g > 0.0) || (u[j] >= hi && *g < 0.0) {
                *g = 0.0;
            }
        }
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm == 0.0 {
            break;
        }
        let mut t = step.unwrap_or(0.1 * scale / gnorm);
        let mut accepted = None;
        while t * gnorm > cfg.inner_tol * scale * 1e-3 {
            let mut trial: Vec<f64> = u.iter().zip(&grad).map(|(v, g)| v - t * g).collect();
            project(&mut trial);
            let decrease: f64 = grad
                .iter()
                .zip(u.iter().zip(&trial))
                .map(|(g, (a, b))| g * (a - b))
                .sum();
            let ft = f.block(x, range.clone(), &trial, player, p)?;
            if ft <= fu - 1e-4 * decrease {
                accepted = Some((trial, ft));
                break;
            }
            t *= 0.5;
        }
        let Some((trial, ft)) = accepted else { break };
        let moved = u
            .iter()
            .zip(&trial)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        u = trial;
        fu = ft;
        step = Some(2.0 * t);
        if moved <= cfg.inner_tol * scale {
            break;
        }
    }
    Ok(u)
}

/// Outcome of [`check_equilibrium`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumCheck {
    pub is_equilibrium: bool,
    /// Largest unilateral improvement found, per player.
    pub improvement: Vec<f64>,
    pub evaluations: usize,
}

/// Tests `x` against unilateral deviations on a regular patch of each
/// player's block box with `points_per_dim` points per coordinate.
///
/// A player whose best deviation improves their cost by more than
/// `rel_tol × (1 + |y_i(x)|)` makes `x` a non-equilibrium.
pub fn check_equilibrium<F>(
    mut objective: F,
    bounds: &[(f64, f64)],
    block_dims: &[usize],
    x: &[f64],
    points_per_dim: usize,
    rel_tol: f64,
) -> Result<EquilibriumCheck>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    if points_per_dim < 2 {
        return Err(invalid("the deviation patch needs at least two points per dimension"));
    }
    let y0 = objective(x)?;
    let mut evaluations = 1;
    let mut improvement = vec![0.0; block_dims.len()];
    for (i, range) in block_ranges(block_dims).into_iter().enumerate() {
        let total = points_per_dim
            .checked_pow(range.len() as u32)
            .filter(|&n| n <= 1_000_000)
            .ok_or_else(|| invalid("deviation patch too large"))?;
        let mut trial = x.to_vec();
        for flat in 0..total {
            let mut rest = flat;
            for c in range.clone() {
                let (lo, hi) = bounds[c];
                let k = rest % points_per_dim;
                rest /= points_per_dim;
                trial[c] = lo + (hi - lo) * k as f64 / (points_per_dim - 1) as f64;
            }
            let y = objective(&trial)?;
            evaluations += 1;
            improvement[i] = f64::max(improvement[i], y0[i] - y[i]);
        }
    }
    let is_equilibrium = improvement
        .iter()
        .zip(&y0)
        .all(|(gain, y)| *gain <= rel_tol * (1.0 + y.abs()));
    Ok(EquilibriumCheck {
        is_equilibrium,
        improvement,
        evaluations,
    })
}
