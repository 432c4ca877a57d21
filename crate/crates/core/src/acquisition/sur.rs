use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

use super::AcquisitionConfig;
use crate::error::{invalid, Error, Result};
use crate::game::NashScratch;
use crate::gp::{FoxyContext, MultiGp, PathEnsemble};
use crate::util::rng_from;

/// Determinant of the sample covariance (denominator `n − 1`) of `points`;
/// zero with fewer than two points.
pub fn gamma_hat(points: &[Vec<f64>]) -> f64 {
    let n = points.len();
    if n < 2 {
        return 0.0;
    }
    let p = points[0].len();
    let mut mean = vec![0.0; p];
    for pt in points {
        for (m, v) in mean.iter_mut().zip(pt) {
            *m += v / n as f64;
        }
    }
    let mut cov = DMatrix::<f64>::zeros(p, p);
    for pt in points {
        for a in 0..p {
            let da = pt[a] - mean[a];
            for b in 0..=a {
                cov[(a, b)] += da * (pt[b] - mean[b]);
            }
        }
    }
    for a in 0..p {
        for b in 0..=a {
            let v = cov[(a, b)] / (n - 1) as f64;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    cov.determinant().max(0.0)
}

/// Equilibria of each draw of an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedEquilibria {
    /// Per draw: the mean objective vector of its equilibria, if it has any.
    pub points: Vec<Option<Vec<f64>>>,
}

impl SimulatedEquilibria {
    pub fn valid(&self) -> Vec<Vec<f64>> {
        self.points.iter().flatten().cloned().collect()
    }

    pub fn no_ne_fraction(&self) -> f64 {
        if self.points.is_empty() {
            return 0.0;
        }
        self.points.iter().filter(|p| p.is_none()).count() as f64 / self.points.len() as f64
    }

    pub fn gamma(&self) -> f64 {
        gamma_hat(&self.valid())
    }
}

fn check_shape(ensemble: &PathEnsemble, shape: &[usize]) -> Result<()> {
    if shape.iter().product::<usize>() != ensemble.n_points() {
        return Err(invalid(format!(
            "simulation shape {shape:?} does not cover {} points",
            ensemble.n_points()
        )));
    }
    Ok(())
}

/// Extracts the equilibrium of every draw; `shape` is the factorial shape
/// of the simulation set in the order of its points.
pub fn simulated_equilibria(ensemble: &PathEnsemble, shape: &[usize]) -> Result<SimulatedEquilibria> {
    check_shape(ensemble, shape)?;
    let mut scratch = NashScratch::default();
    Ok(SimulatedEquilibria {
        points: ensemble
            .draws
            .iter()
            .map(|d| scratch.representative(shape, d))
            .collect(),
    })
}

/// Evaluates `Ĵ` at many candidates with shared observation noise draws.
pub struct SurEvaluator<'a> {
    multi: &'a MultiGp,
    ensemble: &'a PathEnsemble,
    shape: Vec<usize>,
    ctx: FoxyContext<'a>,
    /// `K × p` standard normal draws shared across candidates.
    xi: DMatrix<f64>,
    noise: Vec<f64>,
    base_gamma: f64,
    scratch: NashScratch,
    buffer: DMatrix<f64>,
    points: Vec<Vec<f64>>,
}

impl<'a> SurEvaluator<'a> {
    pub fn new(
        multi: &'a MultiGp,
        ensemble: &'a PathEnsemble,
        shape: &[usize],
        noise_vars: &[f64],
        cfg: &AcquisitionConfig,
        seed: u64,
    ) -> Result<Self> {
        let p = multi.n_objectives();
        if noise_vars.len() != p {
            return Err(invalid(format!("{} noise variances for {p} objectives", noise_vars.len())));
        }
        if cfg.obs_draws == 0 {
            return Err(invalid("at least one observation draw is required"));
        }
        let base_gamma = simulated_equilibria(ensemble, shape)?.gamma();
        let mut rng = rng_from(seed, &[]);
        let xi = DMatrix::from_fn(cfg.obs_draws, p, |_, _| StandardNormal.sample(&mut rng));
        Ok(Self {
            multi,
            ensemble,
            shape: shape.to_vec(),
            ctx: FoxyContext::new(multi, ensemble)?,
            xi,
            noise: noise_vars.to_vec(),
            base_gamma,
            scratch: NashScratch::default(),
            buffer: DMatrix::zeros(ensemble.n_points(), p),
            points: Vec::with_capacity(ensemble.n_draws()),
        })
    }

    /// `Γ̂` of the unconditioned ensemble.
    pub fn base_gamma(&self) -> f64 {
        self.base_gamma
    }

    /// `Ĵ(x) = (1/K) Σ_k Γ̂(𝒴 | F(x) = ℱ_k)`.
    pub fn evaluate(&mut self, x: &[f64]) -> Result<f64> {
        let update = match self.ctx.prepare(x, &self.noise) {
            Ok(u) => u,
            Err(Error::DegenerateUpdate { .. }) => return Ok(self.base_gamma),
            Err(e) => return Err(e),
        };
        let obs = self.multi.observation_dist(x, &self.noise)?;
        let p = self.multi.n_objectives();
        let sd: Vec<f64> = (0..p).map(|i| obs.covariance()[(i, i)].max(0.0).sqrt()).collect();
        let k_draws = self.xi.nrows();
        let mut total = 0.0;
        let mut f = vec![0.0; p];
        for k in 0..k_draws {
            for i in 0..p {
                f[i] = obs.mean()[i] + sd[i] * self.xi[(k, i)];
            }
            self.points.clear();
            for j in 0..self.ensemble.n_draws() {
                update.apply_draw(self.ensemble, j, &f, &mut self.buffer);
                if let Some(pt) = self.scratch.representative(&self.shape, &self.buffer) {
                    self.points.push(pt);
                }
            }
            total += gamma_hat(&self.points);
        }
        Ok(total / k_draws as f64)
    }
}

/// `Ĵ` at a single point.
pub fn sur_criterion(
    multi: &MultiGp,
    ensemble: &PathEnsemble,
    shape: &[usize],
    x: &[f64],
    noise_vars: &[f64],
    cfg: &AcquisitionConfig,
    seed: u64,
) -> Result<f64> {
    SurEvaluator::new(multi, ensemble, shape, noise_vars, cfg, seed)?.evaluate(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_points_have_zero_spread() {
        assert_eq!(gamma_hat(&vec![vec![1.0, 2.0]; 5]), 0.0);
        assert_eq!(gamma_hat(&[vec![1.0, 2.0]]), 0.0);
    }

    #[test]
    fn univariate_variance() {
        assert!((gamma_hat(&[vec![0.0], vec![2.0]]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn bivariate_matches_direct_formula() {
        let pts = vec![vec![0.0, 1.0], vec![1.0, 3.0], vec![2.0, 2.0], vec![4.0, 0.0]];
        // Means (1.75, 1.5); sums of squares and cross products by hand.
        let sxx = 1.75f64.powi(2) + 0.75f64.powi(2) + 0.25f64.powi(2) + 2.25f64.powi(2);
        let syy = 0.25 + 2.25 + 0.25 + 2.25;
        let sxy = (-1.75 * -0.5) + (-0.75 * 1.5) + (0.25 * 0.5) + (2.25 * -1.5);
        let det = (sxx * syy - sxy * sxy) / 9.0;
        assert!((gamma_hat(&pts) - det).abs() < 1e-12);
    }
}
