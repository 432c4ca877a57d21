use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::kernel::{Kernel, KernelFamily};
use super::optimize::minimize_box;
use crate::error::{invalid, Error, Result};
use crate::util::rng_from;

/// Nugget levels (relative to the kernel variance) tried when factorizing.
const NUGGETS: [f64; 5] = [1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

const LOG_LENGTHSCALE: (f64, f64) = (-4.605_170_185_988_091, 2.302_585_092_994_046); // [0.01, 10]
const LOG_VARIANCE: (f64, f64) = (-4.605_170_185_988_091, 4.605_170_185_988_091); // [0.01, 100]
const LOG_NOISE: (f64, f64) = (-18.420_680_743_952_367, 0.0); // [1e-8, 1]

/// How observation noise enters the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NoiseModel {
    /// Known per-observation noise variances (original units).
    Fixed(Vec<f64>),
    /// One homoskedastic variance, fitted with the other hyperparameters.
    Estimated,
}

/// Hyperparameters in the standardized space (inputs in `[0,1]`, unit-variance outputs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub lengthscales: Vec<f64>,
    pub variance: f64,
    pub noise: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct FitConfig {
    /// Number of local optimizations (the first uses the warm start when given).
    pub restarts: usize,
    pub seed: u64,
    /// Box used to rescale inputs to `[0,1]`; data range when `None`.
    pub input_bounds: Option<Vec<(f64, f64)>>,
    pub warm_start: Option<Hyperparameters>,
    pub max_iter: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            restarts: 10,
            seed: 0,
            input_bounds: None,
            warm_start: None,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Scaling {
    in_lower: Vec<f64>,
    in_width: Vec<f64>,
    out_mean: f64,
    out_sd: f64,
}

impl Scaling {
    fn identity(d: usize) -> Self {
        Self {
            in_lower: vec![0.0; d],
            in_width: vec![1.0; d],
            out_mean: 0.0,
            out_sd: 1.0,
        }
    }

    fn inputs(&self, points: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(points.nrows(), points.ncols(), |i, j| {
            (points[(i, j)] - self.in_lower[j]) / self.in_width[j]
        })
    }
}

/// Serializable snapshot of a conditioned model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub version: u32,
    kernel: Kernel,
    estimated_noise: Option<f64>,
    scaling: Scaling,
    inputs: DMatrix<f64>,
    outputs: DVector<f64>,
    noise_vars: DVector<f64>,
}

const RECORD_VERSION: u32 = 1;

/// A Gaussian-process posterior for one objective.
///
/// Internally inputs are rescaled and outputs standardized; every public
/// method speaks original units.
#[derive(Debug, Clone)]
pub struct GpModel {
    kernel: Kernel,
    estimated_noise: Option<f64>,
    scaling: Scaling,
    raw_inputs: DMatrix<f64>,
    raw_outputs: DVector<f64>,
    raw_noise: DVector<f64>,
    inputs: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
}

impl GpModel {
    /// Conditions a zero-mean GP with the given kernel on raw data, without
    /// rescaling or fitting.
    pub fn condition(
        kernel: Kernel,
        inputs: DMatrix<f64>,
        outputs: DVector<f64>,
        noise_vars: DVector<f64>,
    ) -> Result<Self> {
        validate(&inputs, &outputs, &noise_vars)?;
        if kernel.dim() != inputs.ncols() {
            return Err(invalid(format!(
                "kernel has {} lengthscales, inputs have {} columns",
                kernel.dim(),
                inputs.ncols()
            )));
        }
        let scaling = Scaling::identity(inputs.ncols());
        Self::assemble(kernel, None, scaling, inputs, outputs, noise_vars)
    }

    /// Fits hyperparameters by maximum marginal likelihood and conditions.
    pub fn fit(
        inputs: &DMatrix<f64>,
        outputs: &DVector<f64>,
        noise: &NoiseModel,
        family: KernelFamily,
        cfg: &FitConfig,
    ) -> Result<Self> {
        let n = inputs.nrows();
        let d = inputs.ncols();
        let noise_vars = match noise {
            NoiseModel::Fixed(v) => DVector::from_column_slice(v),
            NoiseModel::Estimated => DVector::zeros(n),
        };
        validate(inputs, outputs, &noise_vars)?;
        if n < 2 {
            return Err(invalid("at least two observations are required to fit"));
        }
        let scaling = fit_scaling(inputs, outputs, cfg.input_bounds.as_deref())?;
        let problem = Likelihood {
            family,
            inputs: scaling.inputs(inputs),
            outputs: outputs.map(|v| (v - scaling.out_mean) / scaling.out_sd),
            fixed_noise: noise_vars.map(|v| v / scaling.out_sd.powi(2)),
            estimate_noise: matches!(noise, NoiseModel::Estimated),
        };

        let (lower, upper) = problem.bounds(d);
        let mut rng = rng_from(cfg.seed, &[0x617]);
        let mut best: Option<(Vec<f64>, f64)> = None;
        for restart in 0..cfg.restarts.max(1) {
            let start = if restart == 0 {
                match &cfg.warm_start {
                    Some(h) if h.lengthscales.len() == d => problem.encode(h),
                    _ => problem.default_start(d),
                }
            } else {
                (0..lower.len())
                    .map(|i| rng.random_range(lower[i]..upper[i]))
                    .collect()
            };
            let (theta, value) = minimize_box(
                |t| problem.negative_log_likelihood(t, true),
                &start,
                &lower,
                &upper,
                cfg.max_iter,
            );
            if value.is_finite() && best.as_ref().is_none_or(|(_, v)| value < *v) {
                best = Some((theta, value));
            }
        }
        let theta = match best {
            Some((theta, _)) => theta,
            // Every start failed to factorize; fall back to the default and
            // let `assemble` escalate the nugget or report the offending pair.
            None => problem.default_start(d),
        };
        let hyper = problem.decode(&theta, d);
        let kernel = Kernel::new(family, hyper.lengthscales, hyper.variance);
        Self::assemble(
            kernel,
            hyper.noise,
            scaling,
            inputs.clone(),
            outputs.clone(),
            noise_vars,
        )
    }

    fn assemble(
        kernel: Kernel,
        estimated_noise: Option<f64>,
        scaling: Scaling,
        raw_inputs: DMatrix<f64>,
        raw_outputs: DVector<f64>,
        raw_noise: DVector<f64>,
    ) -> Result<Self> {
        let inputs = scaling.inputs(&raw_inputs);
        if estimated_noise.is_none_or(|g| g == 0.0) {
            if let Some((first, second)) = noise_free_duplicate(&inputs, &raw_noise) {
                return Err(Error::IllConditioned { first, second });
            }
        }
        let sd2 = scaling.out_sd.powi(2);
        let y = raw_outputs.map(|v| (v - scaling.out_mean) / scaling.out_sd);
        let gram = kernel.gram(&inputs);
        let n = inputs.nrows();
        for level in NUGGETS {
            let mut k = gram.clone();
            for i in 0..n {
                k[(i, i)] += raw_noise[i] / sd2 + estimated_noise.unwrap_or(0.0) + level * kernel.variance;
            }
            if let Some(chol) = Cholesky::new(k) {
                let alpha = chol.solve(&y);
                return Ok(Self {
                    kernel,
                    estimated_noise,
                    scaling,
                    raw_inputs,
                    raw_outputs,
                    raw_noise,
                    inputs,
                    chol,
                    alpha,
                });
            }
        }
        let (first, second) = closest_pair(&inputs);
        Err(Error::IllConditioned { first, second })
    }

    /// Same hyperparameters, conditioned on one more observation.
    pub fn with_observation(&self, x: &[f64], f: f64, noise_var: f64) -> Result<Self> {
        let n = self.raw_inputs.nrows();
        let d = self.raw_inputs.ncols();
        if x.len() != d {
            return Err(invalid(format!("point has dimension {}, expected {d}", x.len())));
        }
        let mut inputs = self.raw_inputs.clone().insert_row(n, 0.0);
        for (j, &v) in x.iter().enumerate() {
            inputs[(n, j)] = v;
        }
        let outputs = self.raw_outputs.clone().push(f);
        let noise = self.raw_noise.clone().push(noise_var);
        Self::assemble(
            self.kernel.clone(),
            self.estimated_noise,
            self.scaling.clone(),
            inputs,
            outputs,
            noise,
        )
    }

    pub fn dim(&self) -> usize {
        self.raw_inputs.ncols()
    }

    pub fn n_obs(&self) -> usize {
        self.raw_inputs.nrows()
    }

    pub fn inputs(&self) -> &DMatrix<f64> {
        &self.raw_inputs
    }

    pub fn outputs(&self) -> &DVector<f64> {
        &self.raw_outputs
    }

    pub fn noise_vars(&self) -> &DVector<f64> {
        &self.raw_noise
    }

    /// Fitted hyperparameters in the standardized space.
    pub fn hyperparameters(&self) -> Hyperparameters {
        Hyperparameters {
            lengthscales: self.kernel.lengthscales.clone(),
            variance: self.kernel.variance,
            noise: self.estimated_noise,
        }
    }

    /// The kernel expressed in original input and output units.
    pub fn kernel(&self) -> Kernel {
        Kernel::new(
            self.kernel.family,
            self.kernel
                .lengthscales
                .iter()
                .zip(&self.scaling.in_width)
                .map(|(l, w)| l * w)
                .collect(),
            self.kernel.variance * self.scaling.out_sd.powi(2),
        )
    }

    /// Prior variance in original units.
    pub fn prior_variance(&self) -> f64 {
        self.kernel.variance * self.scaling.out_sd.powi(2)
    }

    /// Estimated homoskedastic noise variance in original units, if fitted.
    pub fn estimated_noise_var(&self) -> Option<f64> {
        self.estimated_noise.map(|g| g * self.scaling.out_sd.powi(2))
    }

    /// Lower Cholesky factor of the (standardized) training covariance.
    pub fn chol_factor(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    fn check_points(&self, points: &DMatrix<f64>) -> Result<()> {
        if points.ncols() != self.dim() {
            return Err(invalid(format!(
                "points have dimension {}, model expects {}",
                points.ncols(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// Scaled coordinates, prior cross-covariance with the design, and
    /// `L⁻¹ k(X, points)`, all standardized.
    pub(crate) fn basis(&self, points: &DMatrix<f64>) -> Result<Basis> {
        self.check_points(points)?;
        let scaled = self.scaling.inputs(points);
        let cross = self.kernel.matrix(&self.inputs, &scaled);
        let proj = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&cross)
            .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
        Ok(Basis {
            scaled,
            cross,
            proj,
        })
    }

    /// Posterior means and variances at the rows of `points`.
    pub fn predict(&self, points: &DMatrix<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
        let basis = self.basis(points)?;
        Ok(self.moments(&basis))
    }

    pub(crate) fn moments(&self, basis: &Basis) -> (DVector<f64>, DVector<f64>) {
        let sd = self.scaling.out_sd;
        let mean = (basis.cross.transpose() * &self.alpha).map(|v| v * sd + self.scaling.out_mean);
        let var = DVector::from_iterator(
            basis.proj.ncols(),
            basis.proj.column_iter().map(|c| {
                (self.kernel.variance - c.norm_squared()).max(0.0) * sd * sd
            }),
        );
        (mean, var)
    }

    /// Posterior cross-covariance `σ²(A, B)`.
    pub fn predict_cov(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let ba = self.basis(a)?;
        let bb = self.basis(b)?;
        Ok(self.cov_between(&ba, &bb))
    }

    pub(crate) fn cov_between(&self, a: &Basis, b: &Basis) -> DMatrix<f64> {
        let prior = self.kernel.matrix(&a.scaled, &b.scaled);
        (prior - a.proj.transpose() * &b.proj) * self.scaling.out_sd.powi(2)
    }

    /// Posterior covariance of a point set with itself, clipped to a
    /// nonnegative diagonal and exactly symmetric.
    pub(crate) fn cov_self(&self, a: &Basis) -> DMatrix<f64> {
        let prior = self.kernel.gram(&a.scaled);
        let mut c = (prior - a.proj.transpose() * &a.proj) * self.scaling.out_sd.powi(2);
        let m = c.nrows();
        for i in 0..m {
            c[(i, i)] = c[(i, i)].max(0.0);
            for j in 0..i {
                let v = 0.5 * (c[(i, j)] + c[(j, i)]);
                c[(i, j)] = v;
                c[(j, i)] = v;
            }
        }
        c
    }

    /// Log marginal likelihood of the standardized data at the fitted hyperparameters.
    pub fn log_marginal_likelihood(&self) -> f64 {
        self.log_marginal_likelihood_at(&self.hyperparameters())
            .unwrap_or(f64::NEG_INFINITY)
    }

    /// Log marginal likelihood of the standardized data at other hyperparameters.
    pub fn log_marginal_likelihood_at(&self, h: &Hyperparameters) -> Option<f64> {
        let problem = Likelihood {
            family: self.kernel.family,
            inputs: self.inputs.clone(),
            outputs: self
                .raw_outputs
                .map(|v| (v - self.scaling.out_mean) / self.scaling.out_sd),
            fixed_noise: self.raw_noise.map(|v| v / self.scaling.out_sd.powi(2)),
            estimate_noise: h.noise.is_some(),
        };
        let theta = problem.encode(h);
        problem
            .negative_log_likelihood(&theta, false)
            .map(|(v, _)| -v)
    }

    pub fn to_record(&self) -> ModelRecord {
        ModelRecord {
            version: RECORD_VERSION,
            kernel: self.kernel.clone(),
            estimated_noise: self.estimated_noise,
            scaling: self.scaling.clone(),
            inputs: self.raw_inputs.clone(),
            outputs: self.raw_outputs.clone(),
            noise_vars: self.raw_noise.clone(),
        }
    }

    pub fn from_record(record: ModelRecord) -> Result<Self> {
        if record.version != RECORD_VERSION {
            return Err(invalid(format!(
                "model record version {} is not supported",
                record.version
            )));
        }
        Self::assemble(
            record.kernel,
            record.estimated_noise,
            record.scaling,
            record.inputs,
            record.outputs,
            record.noise_vars,
        )
    }
}

/// Precomputed quantities for a set of prediction points.
#[derive(Debug, Clone)]
pub(crate) struct Basis {
    pub scaled: DMatrix<f64>,
    pub cross: DMatrix<f64>,
    pub proj: DMatrix<f64>,
}

fn validate(inputs: &DMatrix<f64>, outputs: &DVector<f64>, noise: &DVector<f64>) -> Result<()> {
    let n = inputs.nrows();
    if n == 0 {
        return Err(invalid("no observations"));
    }
    if outputs.len() != n || noise.len() != n {
        return Err(invalid(format!(
            "{n} inputs but {} outputs and {} noise variances",
            outputs.len(),
            noise.len()
        )));
    }
    if inputs.iter().chain(outputs.iter()).any(|v| !v.is_finite()) {
        return Err(invalid("non-finite observation"));
    }
    if noise.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(invalid("noise variances must be finite and nonnegative"));
    }
    Ok(())
}

fn fit_scaling(
    inputs: &DMatrix<f64>,
    outputs: &DVector<f64>,
    bounds: Option<&[(f64, f64)]>,
) -> Result<Scaling> {
    let d = inputs.ncols();
    let (in_lower, in_width) = match bounds {
        Some(b) => {
            if b.len() != d {
                return Err(invalid(format!("{} input bounds for {d} dimensions", b.len())));
            }
            b.iter()
                .map(|&(lo, hi)| (lo, if hi > lo { hi - lo } else { 1.0 }))
                .unzip()
        }
        None => (0..d)
            .map(|j| {
                let c = inputs.column(j);
                let (lo, hi) = (c.min(), c.max());
                (lo, if hi > lo { hi - lo } else { 1.0 })
            })
            .unzip(),
    };
    let n = outputs.len() as f64;
    let out_mean = outputs.mean();
    let var = outputs.iter().map(|v| (v - out_mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let sd = var.sqrt();
    let out_sd = if sd > 1e-12 * out_mean.abs().max(1e-300) && sd > 0.0 {
        sd
    } else {
        1.0
    };
    Ok(Scaling {
        in_lower,
        in_width,
        out_mean,
        out_sd,
    })
}

fn noise_free_duplicate(inputs: &DMatrix<f64>, noise: &DVector<f64>) -> Option<(usize, usize)> {
    let n = inputs.nrows();
    (0..n)
        .filter(|&i| noise[i] == 0.0)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .find(|&(i, j)| noise[j] == 0.0 && inputs.row(i) == inputs.row(j))
}

fn closest_pair(inputs: &DMatrix<f64>) -> (usize, usize) {
    let n = inputs.nrows();
    let mut best = (0, 1.min(n.saturating_sub(1)), f64::INFINITY);
    for i in 0..n {
        for j in i + 1..n {
            let d = (inputs.row(i) - inputs.row(j)).norm_squared();
            if d < best.2 {
                best = (i, j, d);
            }
        }
    }
    (best.0, best.1)
}

/// Negative log marginal likelihood in log-parameter space
/// `θ = [log l_1..log l_d, log variance, (log noise)]`.
struct Likelihood {
    family: KernelFamily,
    inputs: DMatrix<f64>,
    outputs: DVector<f64>,
    fixed_noise: DVector<f64>,
    estimate_noise: bool,
}

impl Likelihood {
    fn bounds(&self, d: usize) -> (Vec<f64>, Vec<f64>) {
        let mut lower = vec![LOG_LENGTHSCALE.0; d];
        let mut upper = vec![LOG_LENGTHSCALE.1; d];
        lower.push(LOG_VARIANCE.0);
        upper.push(LOG_VARIANCE.1);
        if self.estimate_noise {
            lower.push(LOG_NOISE.0);
            upper.push(LOG_NOISE.1);
        }
        (lower, upper)
    }

    fn default_start(&self, d: usize) -> Vec<f64> {
        let mut t = vec![0.3f64.ln(); d];
        t.push(0.0);
        if self.estimate_noise {
            t.push(0.01f64.ln());
        }
        t
    }

    fn encode(&self, h: &Hyperparameters) -> Vec<f64> {
        let mut t: Vec<f64> = h.lengthscales.iter().map(|l| l.ln()).collect();
        t.push(h.variance.ln());
        if self.estimate_noise {
            t.push(h.noise.unwrap_or(0.01).max(1e-8).ln());
        }
        t
    }

    fn decode(&self, theta: &[f64], d: usize) -> Hyperparameters {
        Hyperparameters {
            lengthscales: theta[..d].iter().map(|v| v.exp()).collect(),
            variance: theta[d].exp(),
            noise: self.estimate_noise.then(|| theta[d + 1].exp()),
        }
    }

    fn negative_log_likelihood(&self, theta: &[f64], with_grad: bool) -> Option<(f64, Vec<f64>)> {
        let n = self.inputs.nrows();
        let d = self.inputs.ncols();
        let h = self.decode(theta, d);
        let kernel = Kernel::new(self.family, h.lengthscales, h.variance);
        let (gram, grads) = if with_grad {
            kernel.gram_with_gradients(&self.inputs)
        } else {
            (kernel.gram(&self.inputs), Vec::new())
        };
        let mut k = gram.clone();
        let g = h.noise.unwrap_or(0.0);
        for i in 0..n {
            k[(i, i)] += self.fixed_noise[i] + g + NUGGETS[0] * h.variance;
        }
        let chol = Cholesky::new(k)?;
        let alpha = chol.solve(&self.outputs);
        let log_det: f64 = chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum();
        let value = 0.5 * self.outputs.dot(&alpha)
            + log_det
            + 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
        if !value.is_finite() {
            return None;
        }
        if !with_grad {
            return Some((value, Vec::new()));
        }
        // d nll / dθ = ½ tr((K⁻¹ - ααᵀ) dK/dθ)
        let w = chol.inverse() - &alpha * alpha.transpose();
        let mut grad: Vec<f64> = grads.iter().map(|dk| 0.5 * w.dot(dk)).collect();
        grad.push(0.5 * w.dot(&gram));
        if self.estimate_noise {
            grad.push(0.5 * g * w.trace());
        }
        Some((value, grad))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(xs.len(), 1, xs)
    }

    #[test]
    fn likelihood_gradient_matches_finite_difference() {
        let problem = Likelihood {
            family: KernelFamily::Matern52,
            inputs: DMatrix::from_row_slice(4, 2, &[0.0, 0.1, 0.3, 0.8, 0.6, 0.4, 0.9, 0.95]),
            outputs: DVector::from_column_slice(&[0.3, -1.0, 0.5, 1.2]),
            fixed_noise: DVector::from_element(4, 0.01),
            estimate_noise: true,
        };
        let theta = vec![-1.0, -0.5, 0.2, -3.0];
        let (_, grad) = problem.negative_log_likelihood(&theta, true).unwrap();
        for k in 0..theta.len() {
            let h = 1e-6;
            let mut up = theta.clone();
            up[k] += h;
            let mut down = theta.clone();
            down[k] -= h;
            let fd = (problem.negative_log_likelihood(&up, false).unwrap().0
                - problem.negative_log_likelihood(&down, false).unwrap().0)
                / (2.0 * h);
            assert!((fd - grad[k]).abs() < 1e-5, "component {k}: {fd} vs {}", grad[k]);
        }
    }

    #[test]
    fn two_point_fit_interpolates() {
        let x = line(&[0.0, 1.0]);
        let y = DVector::from_column_slice(&[1.5, -0.5]);
        let m = GpModel::fit(
            &x,
            &y,
            &NoiseModel::Fixed(vec![0.0; 2]),
            KernelFamily::Matern52,
            &FitConfig::default(),
        )
        .unwrap();
        let (mu, var) = m.predict(&x).unwrap();
        assert!((mu - &y).amax() < 1e-8);
        assert!(var.amax() < 1e-8);
    }

    #[test]
    fn duplicate_noise_free_inputs_are_reported() {
        let x = line(&[0.2, 0.5, 0.5]);
        let y = DVector::from_column_slice(&[0.0, 1.0, 2.0]);
        let k = Kernel::new(KernelFamily::Matern52, vec![0.3], 1.0);
        let err = GpModel::condition(k, x, y, DVector::zeros(3)).unwrap_err();
        assert!(matches!(err, Error::IllConditioned { first: 1, second: 2 }), "{err}");
    }

    #[test]
    fn record_round_trip_preserves_predictions() {
        let x = line(&[0.0, 0.4, 1.0]);
        let y = DVector::from_column_slice(&[0.0, 2.0, 1.0]);
        let m = GpModel::fit(
            &x,
            &y,
            &NoiseModel::Fixed(vec![0.0; 3]),
            KernelFamily::SquaredExponential,
            &FitConfig::default(),
        )
        .unwrap();
        let json = serde_json::to_string(&m.to_record()).unwrap();
        let back = GpModel::from_record(serde_json::from_str(&json).unwrap()).unwrap();
        let probe = line(&[0.1, 0.7]);
        assert_eq!(m.predict(&probe).unwrap(), back.predict(&probe).unwrap());
    }

    #[test]
    fn dimension_mismatch_in_predict() {
        let k = Kernel::new(KernelFamily::Matern52, vec![0.3], 1.0);
        let m = GpModel::condition(k, line(&[0.0, 1.0]), DVector::zeros(2), DVector::zeros(2))
            .unwrap();
        assert!(matches!(
            m.predict(&DMatrix::zeros(1, 2)),
            Err(Error::InvalidInput(_))
        ));
    }
}
