use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::GameProblem;
use crate::error::{invalid, Error, Result};
use crate::util::rng_from;

const MAX_DRAWS: u64 = 32;

/// `y_i(x) = ½ x_iᵀ A_i x_i + x_iᵀ B_i x_{−i} + c_iᵀ x_i` with `A_i` SPD.
///
/// The equilibrium solves the stacked first-order system
/// `A_i x_i + B_i x_{−i} + c_i = 0`. Instances are drawn with a chosen
/// equilibrium inside the box and `c` set to match it.
#[derive(Debug, Clone)]
pub struct QuadraticGame {
    block_dims: Vec<usize>,
    a: Vec<DMatrix<f64>>,
    /// `d_i × (d − d_i)`, acting on the other players' blocks in order.
    b: Vec<DMatrix<f64>>,
    c: Vec<DVector<f64>>,
    bound: f64,
    noise_sd: Option<Vec<f64>>,
    equilibrium: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticOptions {
    /// Half-width of the box `[−b, b]^d`.
    pub bound: f64,
    /// Scale of the coupling blocks; zero decouples the players.
    pub coupling: f64,
}

impl Default for QuadraticOptions {
    fn default() -> Self {
        Self {
            bound: 2.0,
            coupling: 0.3,
        }
    }
}

fn offsets(block_dims: &[usize]) -> Vec<usize> {
    block_dims
        .iter()
        .scan(0, |acc, &d| {
            let start = *acc;
            *acc += d;
            Some(start)
        })
        .collect()
}

impl QuadraticGame {
    pub fn random(block_dims: &[usize], seed: u64, opts: QuadraticOptions) -> Result<Self> {
        if block_dims.is_empty() || block_dims.contains(&0) {
            return Err(invalid("every player needs at least one decision variable"));
        }
        for attempt in 0..MAX_DRAWS {
            if let Some(game) = Self::draw(block_dims, seed, attempt, opts) {
                return Ok(game);
            }
        }
        Err(Error::Numerical("could not draw a well-posed quadratic game".into()))
    }

    fn draw(block_dims: &[usize], seed: u64, attempt: u64, opts: QuadraticOptions) -> Option<Self> {
        let mut rng = rng_from(seed, &[attempt]);
        let d: usize = block_dims.iter().sum();
        let mut a = Vec::new();
        let mut b = Vec::new();
        for &di in block_dims {
            let g = DMatrix::<f64>::from_fn(di, di, |_, _| StandardNormal.sample(&mut rng));
            let q = g.qr().q();
            let eig = DVector::from_fn(di, |_, _| rng.random_range(1.0..3.0));
            a.push(&q * DMatrix::from_diagonal(&eig) * q.transpose());
            let scale = opts.coupling / ((d - di).max(1) as f64).sqrt();
            b.push(DMatrix::from_fn(di, d - di, |_, _| {
                let z: f64 = StandardNormal.sample(&mut rng);
                scale * z
            }));
        }
        let x_star: Vec<f64> = (0..d)
            .map(|_| rng.random_range(-0.6 * opts.bound..0.6 * opts.bound))
            .collect();
        let mut game = Self {
            block_dims: block_dims.to_vec(),
            a,
            b,
            c: block_dims.iter().map(|&di| DVector::zeros(di)).collect(),
            bound: opts.bound,
            noise_sd: None,
            equilibrium: x_star.clone(),
        };
        let m = game.stacked_matrix();
        let svd = m.clone().svd(false, false);
        let smin = svd.singular_values.min();
        if !(smin > 1e-3 * svd.singular_values.max()) {
            return None;
        }
        let c = -(m * DVector::from_column_slice(&x_star));
        for (i, off) in offsets(block_dims).into_iter().enumerate() {
            game.c[i] = c.rows(off, block_dims[i]).into_owned();
        }
        Some(game)
    }

    /// Decoupled game with `A_i = I` and `c_i = −target_i`.
    pub fn separable(block_dims: &[usize], targets: &[f64], bound: f64) -> Result<Self> {
        let d: usize = block_dims.iter().sum();
        if targets.len() != d {
            return Err(invalid("one target per decision variable is required"));
        }
        let offs = offsets(block_dims);
        Ok(Self {
            block_dims: block_dims.to_vec(),
            a: block_dims.iter().map(|&di| DMatrix::identity(di, di)).collect(),
            b: block_dims.iter().map(|&di| DMatrix::zeros(di, d - di)).collect(),
            c: block_dims
                .iter()
                .zip(offs)
                .map(|(&di, o)| -DVector::from_column_slice(&targets[o..o + di]))
                .collect(),
            bound,
            noise_sd: None,
            equilibrium: targets.to_vec(),
        })
    }

    /// Adds Gaussian observation noise with standard deviation
    /// `sd_i · (1 + ‖x‖ / (b √d))`, growing away from the origin.
    pub fn with_noise(mut self, sd: Vec<f64>) -> Result<Self> {
        if sd.len() != self.block_dims.len() || sd.iter().any(|s| !(*s >= 0.0)) {
            return Err(invalid("one nonnegative noise level per player is required"));
        }
        self.noise_sd = Some(sd);
        Ok(self)
    }

    pub fn equilibrium(&self) -> &[f64] {
        &self.equilibrium
    }

    /// Matrix of the stacked first-order conditions.
    pub fn stacked_matrix(&self) -> DMatrix<f64> {
        let d: usize = self.block_dims.iter().sum();
        let offs = offsets(&self.block_dims);
        let mut m = DMatrix::zeros(d, d);
        for (i, &oi) in offs.iter().enumerate() {
            let di = self.block_dims[i];
            m.view_mut((oi, oi), (di, di)).copy_from(&self.a[i]);
            let mut col = 0;
            for (j, &oj) in offs.iter().enumerate() {
                if j == i {
                    continue;
                }
                let dj = self.block_dims[j];
                m.view_mut((oi, oj), (di, dj))
                    .copy_from(&self.b[i].columns(col, dj));
                col += dj;
            }
        }
        m
    }

    /// Gradient of `y_i` with respect to block `i`.
    pub fn block_gradient(&self, x: &[f64], player: usize) -> Vec<f64> {
        let (own, others) = self.split(x, player);
        let g = &self.a[player] * own + &self.b[player] * others + &self.c[player];
        g.iter().copied().collect()
    }

    fn split(&self, x: &[f64], player: usize) -> (DVector<f64>, DVector<f64>) {
        let offs = offsets(&self.block_dims);
        let di = self.block_dims[player];
        let own = DVector::from_column_slice(&x[offs[player]..offs[player] + di]);
        let others = DVector::from_iterator(
            x.len() - di,
            x.iter()
                .enumerate()
                .filter(|(k, _)| *k < offs[player] || *k >= offs[player] + di)
                .map(|(_, v)| *v),
        );
        (own, others)
    }
}

impl GameProblem for QuadraticGame {
    fn name(&self) -> String {
        "quadratic".into()
    }

    fn block_dims(&self) -> Vec<usize> {
        self.block_dims.clone()
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        vec![(-self.bound, self.bound); self.block_dims.iter().sum()]
    }

    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        let d: usize = self.block_dims.iter().sum();
        if x.len() != d {
            return Err(invalid(format!("quadratic game takes {d} inputs, got {}", x.len())));
        }
        Ok((0..self.block_dims.len())
            .map(|i| {
                let (own, others) = self.split(x, i);
                0.5 * own.dot(&(&self.a[i] * &own)) + own.dot(&(&self.b[i] * &others)) + self.c[i].dot(&own)
            })
            .collect())
    }

    fn noise_sd(&self, x: &[f64]) -> Option<Vec<f64>> {
        let sd = self.noise_sd.as_ref()?;
        let d = x.len() as f64;
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt() / (self.bound * d.sqrt());
        Some(sd.iter().map(|s| s * (1.0 + r)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilibrium_zeroes_every_block_gradient() {
        for seed in 0..5 {
            let g = QuadraticGame::random(&[2, 1, 2], seed, QuadraticOptions::default()).unwrap();
            for i in 0..3 {
                for v in g.block_gradient(g.equilibrium(), i) {
                    assert!(v.abs() < 1e-8, "seed {seed} player {i}: {v}");
                }
            }
        }
    }

    #[test]
    fn decoupled_equilibrium_is_blockwise() {
        let opts = QuadraticOptions {
            coupling: 0.0,
            ..QuadraticOptions::default()
        };
        let g = QuadraticGame::random(&[2, 2], 7, opts).unwrap();
        for (i, off) in [0usize, 2].into_iter().enumerate() {
            let a_inv = g.a[i].clone().try_inverse().unwrap();
            let expected = -(a_inv * &g.c[i]);
            for k in 0..2 {
                assert!((g.equilibrium()[off + k] - expected[k]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn costs_match_the_quadratic_form() {
        let g = QuadraticGame::separable(&[1, 1], &[0.5, -1.0], 2.0).unwrap();
        let y = g.evaluate(&[1.0, 0.0]).unwrap();
        assert!((y[0] - 0.0).abs() < 1e-15);
        assert!((y[1] - 0.0).abs() < 1e-15);
        let y = g.evaluate(&[0.5, -1.0]).unwrap();
        assert!((y[0] + 0.125).abs() < 1e-15);
        assert!((y[1] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn noise_grows_with_the_radius() {
        let g = QuadraticGame::separable(&[1, 1], &[0.0, 0.0], 2.0)
            .unwrap()
            .with_noise(vec![0.1, 0.2])
            .unwrap();
        let near = g.noise_sd(&[0.0, 0.0]).unwrap();
        let far = g.noise_sd(&[2.0, 2.0]).unwrap();
        assert_eq!(near, vec![0.1, 0.2]);
        assert!(far[0] > near[0]);
    }
}
