use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Stationary kernel families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelFamily {
    SquaredExponential,
    #[default]
    Matern52,
    Matern32,
}

impl KernelFamily {
    /// Correlation as a function of the scaled distance `r`.
    fn correlation(self, r: f64) -> f64 {
        match self {
            Self::SquaredExponential => (-0.5 * r * r).exp(),
            Self::Matern52 => {
                let s = 5f64.sqrt() * r;
                (1.0 + s + s * s / 3.0) * (-s).exp()
            }
            Self::Matern32 => {
                let s = 3f64.sqrt() * r;
                (1.0 + s) * (-s).exp()
            }
        }
    }

    /// `g(r)` such that `d corr / d log(l_d) = g(r) * (Δ_d / l_d)^2`.
    fn lengthscale_factor(self, r: f64) -> f64 {
        match self {
            Self::SquaredExponential => (-0.5 * r * r).exp(),
            Self::Matern52 => {
                let s = 5f64.sqrt() * r;
                5.0 / 3.0 * (1.0 + s) * (-s).exp()
            }
            Self::Matern32 => 3.0 * (-(3f64.sqrt()) * r).exp(),
        }
    }
}

/// A stationary ARD kernel `variance * corr(r)`, with
/// `r² = Σ_d ((a_d - b_d) / l_d)²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub family: KernelFamily,
    pub lengthscales: Vec<f64>,
    pub variance: f64,
}

impl Kernel {
    pub fn new(family: KernelFamily, lengthscales: Vec<f64>, variance: f64) -> Self {
        Self {
            family,
            lengthscales,
            variance,
        }
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    fn scaled_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .zip(&self.lengthscales)
            .map(|((x, y), l)| ((x - y) / l).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        self.variance * self.family.correlation(self.scaled_distance(a, b))
    }

    /// Cross-covariance between the rows of `a` and the rows of `b`.
    pub fn matrix(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        let ra = rows(a);
        let rb = rows(b);
        DMatrix::from_fn(ra.len(), rb.len(), |i, j| self.eval(&ra[i], &rb[j]))
    }

    /// Covariance of the rows of `a` with themselves, built symmetrically.
    pub fn gram(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let r = rows(a);
        let n = r.len();
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            k[(i, i)] = self.variance;
            for j in 0..i {
                let v = self.eval(&r[i], &r[j]);
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        k
    }

    /// Gram matrix plus its derivatives with respect to each `log(l_d)`.
    pub(crate) fn gram_with_gradients(
        &self,
        a: &DMatrix<f64>,
    ) -> (DMatrix<f64>, Vec<DMatrix<f64>>) {
        let r = rows(a);
        let n = r.len();
        let d = self.dim();
        let mut k = DMatrix::zeros(n, n);
        let mut grads = vec![DMatrix::zeros(n, n); d];
        for i in 0..n {
            k[(i, i)] = self.variance;
            for j in 0..i {
                let dist = self.scaled_distance(&r[i], &r[j]);
                let v = self.variance * self.family.correlation(dist);
                k[(i, j)] = v;
                k[(j, i)] = v;
                let g = self.variance * self.family.lengthscale_factor(dist);
                for (dim, grad) in grads.iter_mut().enumerate() {
                    let t = (r[i][dim] - r[j][dim]) / self.lengthscales[dim];
                    let v = g * t * t;
                    grad[(i, j)] = v;
                    grad[(j, i)] = v;
                }
            }
        }
        (k, grads)
    }
}

pub(crate) fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_equals_variance() {
        for family in [
            KernelFamily::SquaredExponential,
            KernelFamily::Matern52,
            KernelFamily::Matern32,
        ] {
            let k = Kernel::new(family, vec![0.3, 2.0], 1.7);
            assert_eq!(k.eval(&[0.1, 0.4], &[0.1, 0.4]), 1.7);
        }
    }

    #[test]
    fn lengthscale_gradient_matches_finite_difference() {
        let pts = DMatrix::from_row_slice(3, 2, &[0.0, 0.1, 0.4, 0.9, 0.7, 0.2]);
        for family in [
            KernelFamily::SquaredExponential,
            KernelFamily::Matern52,
            KernelFamily::Matern32,
        ] {
            let k = Kernel::new(family, vec![0.3, 0.6], 1.3);
            let (_, grads) = k.gram_with_gradients(&pts);
            for dim in 0..2 {
                let h: f64 = 1e-6;
                let mut up = k.clone();
                up.lengthscales[dim] *= h.exp();
                let mut down = k.clone();
                down.lengthscales[dim] *= (-h).exp();
                let fd = (up.gram(&pts) - down.gram(&pts)) / (2.0 * h);
                assert!((fd - &grads[dim]).amax() < 1e-6, "{family:?} dim {dim}");
            }
        }
    }
}
