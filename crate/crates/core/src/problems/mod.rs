//! Benchmark games and strategy-grid construction.

mod diffgame;
mod external;
mod p1;
mod quadratic;

pub use diffgame::{diffgame_evaluate, diffgame_final_state, DifferentialGame, DifferentialGameSpec};
pub use external::ExternalProblem;
pub use p1::{p1_evaluate, P1, P1_BOUNDS};
pub use quadratic::{QuadraticGame, QuadraticOptions};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::design::{maximin_lhd, DEFAULT_LHD_TRIES};
use crate::error::{invalid, Result};
use crate::game::StrategyGrid;
use crate::util::mix_seed;

/// A game with one cost per player over a box of stacked decision blocks.
pub trait GameProblem: Send + Sync {
    fn name(&self) -> String;

    fn block_dims(&self) -> Vec<usize>;

    fn bounds(&self) -> Vec<(f64, f64)>;

    /// Noise-free costs.
    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// Standard deviation of additive Gaussian observation noise at `x`.
    fn noise_sd(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }

    fn n_players(&self) -> usize {
        self.block_dims().len()
    }

    fn dim(&self) -> usize {
        self.block_dims().iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridScheme {
    /// Evenly spaced values per coordinate; `m_i` must be a `d_i`-th power.
    #[default]
    Regular,
    /// One maximin Latin hypercube of `m_i` points per player block.
    LhdPerPlayer,
}

/// Builds a factorial grid with `counts[i]` actions for player `i`.
pub fn build_factorial_grid(
    block_dims: &[usize],
    bounds: &[(f64, f64)],
    counts: &[usize],
    scheme: GridScheme,
    seed: u64,
) -> Result<StrategyGrid> {
    if counts.len() != block_dims.len() {
        return Err(invalid(format!(
            "{} action counts for {} players",
            counts.len(),
            block_dims.len()
        )));
    }
    if bounds.len() != block_dims.iter().sum::<usize>() {
        return Err(invalid("bounds must cover every decision variable"));
    }
    if counts.contains(&0) {
        return Err(invalid("every player needs at least one action"));
    }
    let total = counts
        .iter()
        .try_fold(1usize, |acc, &m| acc.checked_mul(m))
        .filter(|&n| n <= crate::game::DEFAULT_MAX_GRID_SIZE);
    if total.is_none() {
        return Err(invalid(format!(
            "a grid with {counts:?} actions exceeds the size limit of {}",
            crate::game::DEFAULT_MAX_GRID_SIZE
        )));
    }
    let mut offset = 0;
    let mut actions = Vec::with_capacity(counts.len());
    for (i, (&di, &m)) in block_dims.iter().zip(counts).enumerate() {
        let b = &bounds[offset..offset + di];
        offset += di;
        let unit = match scheme {
            _ if m == 1 => DMatrix::from_element(1, di, 0.5),
            GridScheme::Regular => regular_unit(di, m)?,
            GridScheme::LhdPerPlayer => {
                maximin_lhd(m, di, DEFAULT_LHD_TRIES, mix_seed(seed, i as u64))
            }
        };
        actions.push(DMatrix::from_fn(m, di, |r, c| {
            let (lo, hi) = b[c];
            lo + (hi - lo) * unit[(r, c)]
        }));
    }
    StrategyGrid::new(actions)
}

fn regular_unit(d: usize, m: usize) -> Result<DMatrix<f64>> {
    let r = (m as f64).powf(1.0 / d as f64).round() as usize;
    if r.checked_pow(d as u32) != Some(m) || r < 2 {
        return Err(invalid(format!(
            "{m} actions cannot form a regular grid in {d} dimensions"
        )));
    }
    Ok(DMatrix::from_fn(m, d, |row, c| {
        let k = (row / r.pow(c as u32)) % r;
        k as f64 / (r - 1) as f64
    }))
}

/// Problems available by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemSpec {
    P1 {},
    #[serde(rename = "diffgame")]
    DifferentialGame {
        #[serde(default)]
        kappa: Option<usize>,
        #[serde(default)]
        z0: Option<[f64; 2]>,
        #[serde(default)]
        thetas: Option<Vec<f64>>,
        #[serde(default)]
        steps: Option<usize>,
    },
    Quadratic {
        block_dims: Vec<usize>,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        coupling: Option<f64>,
        #[serde(default)]
        bound: Option<f64>,
        #[serde(default)]
        noise_sd: Option<Vec<f64>>,
    },
    External {
        command: Vec<String>,
        block_dims: Vec<usize>,
        bounds: Vec<(f64, f64)>,
    },
}

impl ProblemSpec {
    pub fn build(&self) -> Result<Box<dyn GameProblem>> {
        Ok(match self {
            Self::P1 {} => Box::new(P1),
            Self::DifferentialGame {
                kappa,
                z0,
                thetas,
                steps,
            } => {
                let base = DifferentialGameSpec::default();
                Box::new(DifferentialGame::new(DifferentialGameSpec {
                    kappa: kappa.unwrap_or(base.kappa),
                    z0: z0.unwrap_or(base.z0),
                    thetas: thetas.clone().unwrap_or(base.thetas.clone()),
                    steps: steps.unwrap_or(base.steps),
                    ..base
                })?)
            }
            Self::Quadratic {
                block_dims,
                seed,
                coupling,
                bound,
                noise_sd,
            } => {
                let base = QuadraticOptions::default();
                let opts = QuadraticOptions {
                    coupling: coupling.unwrap_or(base.coupling),
                    bound: bound.unwrap_or(base.bound),
                };
                let game = QuadraticGame::random(block_dims, *seed, opts)?;
                match noise_sd {
                    Some(sd) => Box::new(game.with_noise(sd.clone())?),
                    None => Box::new(game),
                }
            }
            Self::External {
                command,
                block_dims,
                bounds,
            } => Box::new(ExternalProblem::new(
                command.clone(),
                block_dims.clone(),
                bounds.clone(),
            )?),
        })
    }
}

/// Registered problem names with a one-line description.
pub fn registry() -> Vec<(&'static str, &'static str)> {
    vec![
        ("p1", "two-player Branin-type toy game on [-5,10] x [0,15]"),
        ("diffgame", "four-player open-loop differential game (kappa spline coefficients)"),
        ("quadratic", "random coupled quadratic game with a known equilibrium"),
        ("external", "executable answering one line of costs per line of inputs"),
    ]
}
