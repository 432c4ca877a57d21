//! Multivariate-normal primitives: jitter-regularized factorization, sampling,
//! and orthant probabilities `P(Z <= 0)` by randomized quasi-Monte-Carlo.
//!
//! The CDF follows Genz's separation-of-variables transform with
//! truncated-mean variable reordering, integrated on a randomly shifted
//! Richtmyer lattice with the baker's (tent) periodization. The reported
//! error is three standard errors across the random shifts.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::error::{invalid, Error, Result};
use crate::util::{norm_cdf, norm_pdf, norm_quantile, rng_from};

/// Relative jitter levels tried in turn, as multiples of `trace / q`.
const JITTER_LEVELS: [f64; 5] = [1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

/// Default cap on the CDF dimension.
pub const DEFAULT_MAX_DIM: usize = 1000;

/// Default absolute accuracy of [`mvn_cdf_at_zero`].
pub const DEFAULT_ACCURACY: f64 = 1e-3;

/// A Gaussian distribution given by mean and covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSpec {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianSpec {
    /// Builds a spec, symmetrizing the covariance.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let q = mean.len();
        if q == 0 {
            return Err(invalid("Gaussian dimension must be at least 1"));
        }
        if cov.nrows() != q || cov.ncols() != q {
            return Err(invalid(format!(
                "mean has length {q} but covariance is {}x{}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(invalid("non-finite mean or covariance entry"));
        }
        let cov = (&cov + cov.transpose()) * 0.5;
        Ok(Self { mean, cov })
    }

    pub fn from_slices(mean: &[f64], cov: &[f64]) -> Result<Self> {
        let q = mean.len();
        if cov.len() != q * q {
            return Err(invalid(format!(
                "covariance has {} entries, expected {}",
                cov.len(),
                q * q
            )));
        }
        Self::new(
            DVector::from_column_slice(mean),
            DMatrix::from_row_slice(q, q, cov),
        )
    }

    /// Independent components with the given variances.
    pub fn diagonal(mean: &[f64], variances: &[f64]) -> Result<Self> {
        if mean.len() != variances.len() {
            return Err(invalid("mean and variances differ in length"));
        }
        Self::new(
            DVector::from_column_slice(mean),
            DMatrix::from_diagonal(&DVector::from_column_slice(variances)),
        )
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }
}

fn jitter_scale(cov: &DMatrix<f64>) -> f64 {
    cov.trace() / cov.nrows() as f64
}

/// Returns `L` with `L Lᵀ ≈ cov`.
///
/// Tries Cholesky with escalating diagonal jitter, then falls back to an
/// eigendecomposition with small negative eigenvalues clipped to zero. The
/// result is lower triangular only when Cholesky succeeds.
pub fn robust_factor(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let q = cov.nrows();
    let scale = jitter_scale(cov);
    if !scale.is_finite() {
        return Err(Error::Numerical("non-finite covariance".into()));
    }
    if scale > 0.0 {
        for level in JITTER_LEVELS {
            let mut a = cov.clone();
            for i in 0..q {
                a[(i, i)] += level * scale;
            }
            if let Some(ch) = Cholesky::new(a) {
                return Ok(ch.unpack());
            }
        }
    }
    let eig = SymmetricEigen::new(cov.clone());
    let tol = 1e-6 * scale.abs().max(f64::MIN_POSITIVE);
    let min_eig = eig.eigenvalues.min();
    if min_eig < -tol {
        return Err(Error::Numerical(format!(
            "covariance is not positive semi-definite (eigenvalue {min_eig:e})"
        )));
    }
    let mut factor = eig.eigenvectors;
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        let s = lambda.max(0.0).sqrt();
        factor.column_mut(j).scale_mut(s);
    }
    Ok(factor)
}

/// Draws `count` i.i.d. samples as the rows of a `count × q` matrix.
pub fn mvn_sample(spec: &GaussianSpec, count: usize, seed: u64) -> Result<DMatrix<f64>> {
    let factor = robust_factor(&spec.cov)?;
    let q = spec.dim();
    let mut rng = rng_from(seed, &[]);
    let mut out = DMatrix::zeros(count, q);
    let mut z = DVector::zeros(q);
    for r in 0..count {
        for v in z.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        let x = &factor * &z;
        for c in 0..q {
            out[(r, c)] = spec.mean[c] + x[c];
        }
    }
    Ok(out)
}

/// Options for [`mvn_cdf_at_zero_with`].
#[derive(Debug, Clone, Copy)]
pub struct CdfOptions {
    /// Target absolute error (three standard errors across shifts).
    pub accuracy: f64,
    /// Seed of the random lattice shifts.
    pub seed: u64,
    /// Budget of integrand evaluations.
    pub max_evals: usize,
    pub max_dim: usize,
}

impl Default for CdfOptions {
    fn default() -> Self {
        Self {
            accuracy: DEFAULT_ACCURACY,
            seed: 0x5EED_0F_CDF,
            max_evals: 1_000_000,
            max_dim: DEFAULT_MAX_DIM,
        }
    }
}

/// A probability together with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdfEstimate {
    pub value: f64,
    pub error: f64,
}

/// `P(Z <= 0)` for `Z ~ spec`, with default options and the given accuracy.
pub fn mvn_cdf_at_zero(spec: &GaussianSpec, accuracy: f64) -> Result<CdfEstimate> {
    if !(accuracy > 0.0) {
        return Err(invalid("accuracy must be positive"));
    }
    mvn_cdf_at_zero_with(
        spec,
        &CdfOptions {
            accuracy,
            ..CdfOptions::default()
        },
    )
}

pub fn mvn_cdf_at_zero_with(spec: &GaussianSpec, opts: &CdfOptions) -> Result<CdfEstimate> {
    let q = spec.dim();
    if q > opts.max_dim {
        return Err(Error::UnsupportedSize {
            what: "CDF dimension",
            got: q,
            max: opts.max_dim,
        });
    }
    // P(Z <= 0) = P(X <= -mean) with X centered.
    let upper: Vec<f64> = spec.mean.iter().map(|m| -m).collect();
    let scale = jitter_scale(&spec.cov);
    if scale <= 0.0 {
        let value = if upper.iter().all(|&b| b >= 0.0) { 1.0 } else { 0.0 };
        return Ok(CdfEstimate { value, error: 0.0 });
    }
    let mut factor = None;
    for level in JITTER_LEVELS {
        if let Some(f) = ReorderedCholesky::new(&spec.cov, &upper, level * scale) {
            factor = Some(f);
            break;
        }
    }
    let factor = factor.ok_or_else(|| {
        Error::Numerical("covariance not positive definite after jitter escalation".into())
    })?;
    Ok(factor.integrate(opts))
}

/// Cholesky factor computed with Genz–Trinh variable reordering.
struct ReorderedCholesky {
    q: usize,
    /// Row-major lower triangle.
    l: Vec<f64>,
    upper: Vec<f64>,
}

impl ReorderedCholesky {
    fn new(cov: &DMatrix<f64>, upper: &[f64], jitter: f64) -> Option<Self> {
        let q = upper.len();
        let mut a = cov.clone();
        for i in 0..q {
            a[(i, i)] += jitter;
        }
        let mut b = upper.to_vec();
        let mut l = vec![0.0; q * q];
        let mut y = vec![0.0; q];
        for k in 0..q {
            let mut pivot = k;
            let mut best = f64::INFINITY;
            for i in k..q {
                let row = &l[i * q..i * q + k];
                let s2 = a[(i, i)] - row.iter().map(|v| v * v).sum::<f64>();
                if !(s2 > 0.0) {
                    return None;
                }
                let shift: f64 = row.iter().zip(&y[..k]).map(|(u, v)| u * v).sum();
                let prob = norm_cdf((b[i] - shift) / s2.sqrt());
                if prob < best {
                    best = prob;
                    pivot = i;
                }
            }
            if pivot != k {
                a.swap_rows(k, pivot);
                a.swap_columns(k, pivot);
                b.swap(k, pivot);
                for j in 0..k {
                    l.swap(k * q + j, pivot * q + j);
                }
            }
            let s2 = a[(k, k)] - l[k * q..k * q + k].iter().map(|v| v * v).sum::<f64>();
            let s = s2.sqrt();
            l[k * q + k] = s;
            for i in k + 1..q {
                let dot: f64 = (0..k).map(|j| l[i * q + j] * l[k * q + j]).sum();
                l[i * q + k] = (a[(i, k)] - dot) / s;
            }
            let shift: f64 = (0..k).map(|j| l[k * q + j] * y[j]).sum();
            let bk = (b[k] - shift) / s;
            let p = norm_cdf(bk);
            // Mean of a standard normal truncated to (-inf, bk].
            y[k] = if p > 1e-300 { -norm_pdf(bk) / p } else { bk };
        }
        Some(Self { q, l, upper: b })
    }

    fn integrand(&self, w: &[f64], y: &mut [f64]) -> f64 {
        let q = self.q;
        let mut e = norm_cdf(self.upper[0] / self.l[0]);
        let mut f = e;
        for k in 1..q {
            if f == 0.0 {
                break;
            }
            let u = (w[k - 1] * e).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
            y[k - 1] = norm_quantile(u);
            let row = &self.l[k * q..k * q + k];
            let shift: f64 = row.iter().zip(&y[..k]).map(|(a, b)| a * b).sum();
            e = norm_cdf((self.upper[k] - shift) / self.l[k * q + k]);
            f *= e;
        }
        f
    }

    fn integrate(&self, opts: &CdfOptions) -> CdfEstimate {
        const SHIFTS: usize = 10;
        let q = self.q;
        if q == 1 {
            return CdfEstimate {
                value: norm_cdf(self.upper[0] / self.l[0]),
                error: 0.0,
            };
        }
        let dim = q - 1;
        let generator = richtmyer_generator(dim);
        let mut rng = rng_from(opts.seed, &[q as u64]);
        let unit = Uniform::new(0.0, 1.0).expect("valid range");
        let mut n = 64usize;
        let mut w = vec![0.0; dim];
        let mut y = vec![0.0; q];
        loop {
            let mut means = [0.0; SHIFTS];
            for mean in means.iter_mut() {
                let shift: Vec<f64> = (0..dim).map(|_| unit.sample(&mut rng)).collect();
                let mut acc = 0.0;
                for i in 1..=n {
                    for j in 0..dim {
                        let x = (i as f64 * generator[j] + shift[j]).fract();
                        w[j] = (2.0 * x - 1.0).abs();
                    }
                    acc += self.integrand(&w, &mut y);
                }
                *mean = acc / n as f64;
            }
            let value = means.iter().sum::<f64>() / SHIFTS as f64;
            let var = means.iter().map(|m| (m - value).powi(2)).sum::<f64>()
                / (SHIFTS * (SHIFTS - 1)) as f64;
            let estimate = CdfEstimate {
                value: value.clamp(0.0, 1.0),
                error: 3.0 * var.sqrt(),
            };
            if estimate.error <= opts.accuracy || 2 * n * SHIFTS > opts.max_evals {
                return estimate;
            }
            n *= 2;
        }
    }
}

/// Fractional parts of square roots of the first `dim` primes.
fn richtmyer_generator(dim: usize) -> Vec<f64> {
    let mut primes = Vec::with_capacity(dim);
    let mut candidate = 2u64;
    while primes.len() < dim {
        if primes
            .iter()
            .take_while(|&&p| p * p <= candidate)
            .all(|&p| candidate % p != 0)
        {
            primes.push(candidate);
        }
        candidate += 1;
    }
    primes.iter().map(|&p| (p as f64).sqrt().fract()).collect()
}
