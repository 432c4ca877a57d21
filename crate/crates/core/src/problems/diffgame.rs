use serde::{Deserialize, Serialize};

use super::GameProblem;
use crate::error::{invalid, Result};

/// Open-loop differential game: `p` players steer a planar state
/// `ż = v0 + Σ_i e^{−θ_i t} x_i(t)` towards their own targets, paying
/// `½‖z(T) − target_i‖² + ½‖x_i‖²_{L²(0,T)}`.
///
/// Each control coordinate is a combination of the `kappa` Bernstein
/// polynomials of degree `kappa − 1` in `t/T` (the B-spline basis of order
/// `kappa` without interior knots). Player `i`'s decision block is
/// `(a_1..a_κ, b_1..b_κ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DifferentialGameSpec {
    pub horizon: f64,
    pub steps: usize,
    pub v0: [f64; 2],
    pub z0: [f64; 2],
    pub targets: Vec<[f64; 2]>,
    pub thetas: Vec<f64>,
    pub kappa: usize,
    /// Half-width of the decision box `[−b, b]^d`.
    pub bound: f64,
}

impl Default for DifferentialGameSpec {
    fn default() -> Self {
        Self {
            horizon: 4.0,
            steps: 40,
            v0: [0.0, 0.0],
            z0: [0.0, 0.5],
            targets: vec![[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]],
            thetas: vec![0.25, 0.0, 0.5, 0.0],
            kappa: 1,
            bound: 6.0,
        }
    }
}

impl DifferentialGameSpec {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.kappa == 0 {
            return Err(invalid("steps and kappa must be at least 1"));
        }
        if !(self.horizon > 0.0) || !(self.bound > 0.0) {
            return Err(invalid("horizon and bound must be positive"));
        }
        if self.targets.is_empty() || self.targets.len() != self.thetas.len() {
            return Err(invalid("one target and one theta per player are required"));
        }
        Ok(())
    }

    pub fn n_players(&self) -> usize {
        self.targets.len()
    }

    pub fn block_dim(&self) -> usize {
        2 * self.kappa
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

fn bernstein(kappa: usize, s: f64) -> Vec<f64> {
    let deg = kappa - 1;
    (0..kappa)
        .map(|k| binomial(deg, k) * s.powi(k as i32) * (1.0 - s).powi((deg - k) as i32))
        .collect()
}

/// Explicit Euler integration: final state and per-player `‖x_i‖²_{L²}`.
fn integrate(spec: &DifferentialGameSpec, x: &[f64]) -> Result<([f64; 2], Vec<f64>)> {
    spec.validate()?;
    let p = spec.n_players();
    let kappa = spec.kappa;
    let bd = spec.block_dim();
    if x.len() != p * bd {
        return Err(invalid(format!(
            "differential game takes {} inputs, got {}",
            p * bd,
            x.len()
        )));
    }
    let h = spec.horizon / spec.steps as f64;
    let mut z = spec.z0;
    let mut energy = vec![0.0; p];
    for n in 0..spec.steps {
        let t = n as f64 * h;
        let basis = bernstein(kappa, t / spec.horizon);
        let mut dz = spec.v0;
        for (i, block) in x.chunks(bd).enumerate() {
            let u = [
                basis.iter().zip(&block[..kappa]).map(|(b, a)| b * a).sum::<f64>(),
                basis.iter().zip(&block[kappa..]).map(|(b, a)| b * a).sum::<f64>(),
            ];
            let w = (-spec.thetas[i] * t).exp();
            dz[0] += w * u[0];
            dz[1] += w * u[1];
            energy[i] += h * (u[0] * u[0] + u[1] * u[1]);
        }
        z[0] += h * dz[0];
        z[1] += h * dz[1];
    }
    Ok((z, energy))
}

/// Costs of all players for the stacked decision vector `x`.
pub fn diffgame_evaluate(spec: &DifferentialGameSpec, x: &[f64]) -> Result<Vec<f64>> {
    let (z, energy) = integrate(spec, x)?;
    Ok(spec
        .targets
        .iter()
        .zip(energy)
        .map(|(t, e)| 0.5 * ((z[0] - t[0]).powi(2) + (z[1] - t[1]).powi(2)) + 0.5 * e)
        .collect())
}

/// Final state `z(T)` for the decision vector `x`.
pub fn diffgame_final_state(spec: &DifferentialGameSpec, x: &[f64]) -> Result<[f64; 2]> {
    Ok(integrate(spec, x)?.0)
}

#[derive(Debug, Clone, Default)]
pub struct DifferentialGame {
    pub spec: DifferentialGameSpec,
}

impl DifferentialGame {
    pub fn new(spec: DifferentialGameSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self { spec })
    }
}

impl GameProblem for DifferentialGame {
    fn name(&self) -> String {
        format!("diffgame-k{}", self.spec.kappa)
    }

    fn block_dims(&self) -> Vec<usize> {
        vec![self.spec.block_dim(); self.spec.n_players()]
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        vec![(-self.spec.bound, self.spec.bound); self.spec.n_players() * self.spec.block_dim()]
    }

    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        diffgame_evaluate(&self.spec, x)
    }
}
