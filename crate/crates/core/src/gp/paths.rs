//! Joint conditional simulation over a finite point set, and the fast
//! ensemble update that conditions existing draws on one more observation.

use std::cell::OnceCell;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand_distr::{Distribution, StandardNormal};

use super::model::Basis;
use super::MultiGp;
use crate::error::{invalid, Error, Result};
use crate::mvn::robust_factor;
use crate::util::{mix_seed, rng_from};

pub const DEFAULT_MAX_SIM_POINTS: usize = 4096;

/// Posterior variance below this fraction of the prior variance counts as
/// "already known" for a noise-free update.
const DEGENERATE_RELATIVE_VARIANCE: f64 = 1e-8;

const FOXY_NOISE_TAG: u64 = 0xF0_C5;

/// `M` joint posterior draws of all objectives over a simulation set.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    /// Caller-provided labels of the simulation points (grid indices).
    pub sim_points: Vec<usize>,
    /// Coordinates of the simulation points, one row each.
    pub coords: DMatrix<f64>,
    /// One `N_sim × p` matrix per draw.
    pub draws: Vec<DMatrix<f64>>,
    pub seed: u64,
}

impl PathEnsemble {
    pub fn n_draws(&self) -> usize {
        self.draws.len()
    }

    pub fn n_points(&self) -> usize {
        self.sim_points.len()
    }

    /// Row of `coords` equal to `x`, if any.
    pub fn position_of(&self, x: &[f64]) -> Option<usize> {
        self.coords
            .row_iter()
            .position(|r| r.len() == x.len() && r.iter().zip(x).all(|(a, b)| a == b))
    }
}

/// Draws `m` joint posterior samples of every objective at `coords`.
pub fn simulate_paths(
    multi: &MultiGp,
    sim_points: &[usize],
    coords: &DMatrix<f64>,
    m: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    let n = coords.nrows();
    if sim_points.len() != n {
        return Err(invalid(format!(
            "{} labels for {n} simulation points",
            sim_points.len()
        )));
    }
    if n > DEFAULT_MAX_SIM_POINTS {
        return Err(Error::UnsupportedSize {
            what: "simulation set",
            got: n,
            max: DEFAULT_MAX_SIM_POINTS,
        });
    }
    if m == 0 {
        return Err(invalid("number of draws must be positive"));
    }
    let p = multi.n_objectives();
    let mut draws = vec![DMatrix::zeros(n, p); m];
    for (i, model) in multi.models().iter().enumerate() {
        let basis = model.basis(coords)?;
        let (mean, _) = model.moments(&basis);
        let cov = model.cov_self(&basis);
        let factor = robust_factor(&cov).map_err(|e| {
            Error::Numerical(format!("{e}; try a smaller simulation set"))
        })?;
        let mut rng = rng_from(seed, &[i as u64]);
        let z = DMatrix::from_fn(n, m, |_, _| StandardNormal.sample(&mut rng));
        let y = factor * z;
        for (j, draw) in draws.iter_mut().enumerate() {
            for k in 0..n {
                draw[(k, i)] = mean[k] + y[(k, j)];
            }
        }
    }
    Ok(PathEnsemble {
        sim_points: sim_points.to_vec(),
        coords: coords.clone(),
        draws,
        seed,
    })
}

/// Per-ensemble cache for repeated updates at different points.
pub struct FoxyContext<'a> {
    multi: &'a MultiGp,
    ensemble: &'a PathEnsemble,
    bases: Vec<Basis>,
    kriging: Vec<OnceCell<(DVector<f64>, PsdSolver)>>,
}

/// Update weights for one new observation site.
///
/// For objective `i`, `λ⁽ⁱ⁾ = σ²ᵢ(x, X_sim) / (σ²ᵢ(x, x) + τᵢ²)` and each
/// draw moves by `λ⁽ⁱ⁾ (F_i − Y_j(x) − ε_j)`, where `ε_j` is a simulated
/// noise realization (zero when `τᵢ = 0`). The simulated noise makes the
/// update exact for noisy observations.
#[derive(Debug, Clone)]
pub struct FoxyUpdate {
    lambdas: Vec<DVector<f64>>,
    /// `M × p`: each draw's value at the site plus its noise realization.
    anchors: DMatrix<f64>,
}

impl<'a> FoxyContext<'a> {
    pub fn new(multi: &'a MultiGp, ensemble: &'a PathEnsemble) -> Result<Self> {
        if ensemble.draws.first().is_some_and(|d| d.ncols() != multi.n_objectives()) {
            return Err(invalid("ensemble and model disagree on the number of objectives"));
        }
        let bases = multi
            .models()
            .iter()
            .map(|m| m.basis(&ensemble.coords))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            multi,
            ensemble,
            kriging: bases.iter().map(|_| OnceCell::new()).collect(),
            bases,
        })
    }

    pub fn prepare(&self, x: &[f64], noise_vars: &[f64]) -> Result<FoxyUpdate> {
        let p = self.multi.n_objectives();
        if noise_vars.len() != p {
            return Err(invalid(format!("{} noise variances for {p} objectives", noise_vars.len())));
        }
        let ens = self.ensemble;
        let m = ens.n_draws();
        let xm = DMatrix::from_row_slice(1, x.len(), x);
        let site = ens.position_of(x);
        let noise_seed = x
            .iter()
            .fold(mix_seed(ens.seed, FOXY_NOISE_TAG), |s, v| mix_seed(s, v.to_bits()));

        let mut lambdas = Vec::with_capacity(p);
        let mut anchors = DMatrix::zeros(m, p);
        for (i, model) in self.multi.models().iter().enumerate() {
            let bx = model.basis(&xm)?;
            let (mu_x, var_x) = model.moments(&bx);
            let (mu_x, var_x) = (mu_x[0], var_x[0]);
            let tau2 = noise_vars[i];
            if tau2 == 0.0 && var_x <= DEGENERATE_RELATIVE_VARIANCE * model.prior_variance() {
                return Err(Error::DegenerateUpdate { variance: var_x });
            }
            let cross = model.cov_between(&bx, &self.bases[i]);
            let cross = DVector::from_iterator(cross.ncols(), cross.row(0).iter().copied());
            lambdas.push(&cross / (var_x + tau2));

            match site {
                Some(pos) => {
                    for j in 0..m {
                        anchors[(j, i)] = ens.draws[j][(pos, i)];
                    }
                }
                None => {
                    // Extend each draw to x by conditional (kriging) simulation.
                    let (mu_sim, solver) = self.kriging[i].get_or_init(|| {
                        let basis = &self.bases[i];
                        (model.moments(basis).0, PsdSolver::new(model.cov_self(basis)))
                    });
                    let weights = solver.solve(&cross);
                    let resid = (var_x - cross.dot(&weights)).max(0.0).sqrt();
                    let mut rng = rng_from(noise_seed, &[i as u64, 1]);
                    for j in 0..m {
                        let dev: f64 = (0..ens.n_points())
                            .map(|k| weights[k] * (ens.draws[j][(k, i)] - mu_sim[k]))
                            .sum();
                        let xi: f64 = StandardNormal.sample(&mut rng);
                        anchors[(j, i)] = mu_x + dev + resid * xi;
                    }
                }
            }
            if tau2 > 0.0 {
                let mut rng = rng_from(noise_seed, &[i as u64, 2]);
                let sd = tau2.sqrt();
                for j in 0..m {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    anchors[(j, i)] += sd * e;
                }
            }
        }
        Ok(FoxyUpdate { lambdas, anchors })
    }
}

impl FoxyUpdate {
    pub fn lambda(&self, objective: usize) -> &DVector<f64> {
        &self.lambdas[objective]
    }

    /// Writes draw `j` of `base`, conditioned on the observation `f`, into `out`.
    pub fn apply_draw(&self, base: &PathEnsemble, j: usize, f: &[f64], out: &mut DMatrix<f64>) {
        out.copy_from(&base.draws[j]);
        for (i, lambda) in self.lambdas.iter().enumerate() {
            let shift = f[i] - self.anchors[(j, i)];
            let mut col = out.column_mut(i);
            col.axpy(shift, lambda, 1.0);
        }
    }

    pub fn apply(&self, base: &PathEnsemble, f: &[f64]) -> PathEnsemble {
        let draws = (0..base.n_draws())
            .map(|j| {
                let mut out = base.draws[j].clone();
                self.apply_draw(base, j, f, &mut out);
                out
            })
            .collect();
        PathEnsemble {
            draws,
            ..base.clone()
        }
    }
}

/// Conditions every draw of `ensemble` on `F(x_new) = f_new`.
pub fn foxy_update(
    ensemble: &PathEnsemble,
    multi: &MultiGp,
    x_new: &[f64],
    f_new: &[f64],
    noise_vars: &[f64],
) -> Result<PathEnsemble> {
    if f_new.len() != multi.n_objectives() {
        return Err(invalid("observation length differs from the number of objectives"));
    }
    let update = FoxyContext::new(multi, ensemble)?.prepare(x_new, noise_vars)?;
    Ok(update.apply(ensemble, f_new))
}

/// Solver for `a w = b` with symmetric PSD `a`: jittered Cholesky, or a
/// pseudo-inverse when that fails.
enum PsdSolver {
    Cholesky(Cholesky<f64, Dyn>),
    Pseudo(DMatrix<f64>),
}

impl PsdSolver {
    fn new(a: DMatrix<f64>) -> Self {
        let n = a.nrows();
        let scale = (a.trace() / n as f64).max(f64::MIN_POSITIVE);
        for level in [1e-10, 1e-8, 1e-6] {
            let mut m = a.clone();
            for i in 0..n {
                m[(i, i)] += level * scale;
            }
            if let Some(ch) = Cholesky::new(m) {
                return Self::Cholesky(ch);
            }
        }
        Self::Pseudo(
            a.pseudo_inverse(1e-10 * scale)
                .unwrap_or_else(|_| DMatrix::zeros(n, n)),
        )
    }

    fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        match self {
            Self::Cholesky(ch) => ch.solve(b),
            Self::Pseudo(pinv) => pinv * b,
        }
    }
}
