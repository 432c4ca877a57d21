//! Gaussian-process surrogates: one independent model per objective.

mod kernel;
mod model;
mod optimize;
mod paths;

pub use kernel::{Kernel, KernelFamily};
pub use model::{FitConfig, GpModel, Hyperparameters, ModelRecord, NoiseModel};
pub use paths::{
    foxy_update, simulate_paths, FoxyContext, FoxyUpdate, PathEnsemble, DEFAULT_MAX_SIM_POINTS,
};

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};
use crate::mvn::GaussianSpec;
use crate::util::mix_seed;

/// Independent GP models for the `p` objectives, sharing one design.
#[derive(Debug, Clone)]
pub struct MultiGp {
    models: Vec<GpModel>,
}

impl MultiGp {
    pub fn new(models: Vec<GpModel>) -> Result<Self> {
        let Some(first) = models.first() else {
            return Err(invalid("at least one objective model is required"));
        };
        if models.iter().any(|m| m.inputs() != first.inputs()) {
            return Err(invalid("objective models must share the same design"));
        }
        Ok(Self { models })
    }

    /// Fits one model per column of `outputs`.
    pub fn fit(
        inputs: &DMatrix<f64>,
        outputs: &DMatrix<f64>,
        noise: &[NoiseModel],
        family: KernelFamily,
        cfg: &FitConfig,
        warm: Option<&[Hyperparameters]>,
    ) -> Result<Self> {
        let p = outputs.ncols();
        if noise.len() != p {
            return Err(invalid(format!("{} noise models for {p} objectives", noise.len())));
        }
        let models = (0..p)
            .map(|i| {
                let cfg = FitConfig {
                    seed: mix_seed(cfg.seed, i as u64),
                    warm_start: warm.and_then(|w| w.get(i).cloned()),
                    ..cfg.clone()
                };
                let y = DVector::from_iterator(outputs.nrows(), outputs.column(i).iter().copied());
                GpModel::fit(inputs, &y, &noise[i], family, &cfg)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(models)
    }

    pub fn models(&self) -> &[GpModel] {
        &self.models
    }

    pub fn n_objectives(&self) -> usize {
        self.models.len()
    }

    pub fn dim(&self) -> usize {
        self.models[0].dim()
    }

    /// Posterior means and variances, one column per objective.
    pub fn predict(&self, points: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let m = points.nrows();
        let p = self.models.len();
        let mut means = DMatrix::zeros(m, p);
        let mut vars = DMatrix::zeros(m, p);
        for (i, model) in self.models.iter().enumerate() {
            let (mu, var) = model.predict(points)?;
            means.set_column(i, &mu);
            vars.set_column(i, &var);
        }
        Ok((means, vars))
    }

    /// Predictive distribution of a noisy observation `F(x) = Y(x) + ε`.
    pub fn observation_dist(&self, point: &[f64], noise_vars: &[f64]) -> Result<GaussianSpec> {
        let p = self.models.len();
        if noise_vars.len() != p {
            return Err(invalid(format!(
                "{} noise variances for {p} objectives",
                noise_vars.len()
            )));
        }
        let x = DMatrix::from_row_slice(1, point.len(), point);
        let (mu, var) = self.predict(&x)?;
        let mean: Vec<f64> = mu.row(0).iter().copied().collect();
        let var: Vec<f64> = var
            .row(0)
            .iter()
            .zip(noise_vars)
            .map(|(v, t)| v + t)
            .collect();
        GaussianSpec::diagonal(&mean, &var)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(xs: &[f64], ys: &[f64]) -> GpModel {
        GpModel::condition(
            Kernel::new(KernelFamily::Matern52, vec![0.5], 2.0),
            DMatrix::from_column_slice(xs.len(), 1, xs),
            DVector::from_column_slice(ys),
            DVector::zeros(xs.len()),
        )
        .unwrap()
    }

    #[test]
    fn observation_at_noise_free_training_point_is_a_delta() {
        let multi = MultiGp::new(vec![model(&[0.0, 1.0], &[1.0, 2.0]), model(&[0.0, 1.0], &[3.0, 4.0])])
            .unwrap();
        let spec = multi.observation_dist(&[1.0], &[0.0, 0.0]).unwrap();
        assert!((spec.mean()[0] - 2.0).abs() < 1e-8);
        assert!((spec.mean()[1] - 4.0).abs() < 1e-8);
        assert!(spec.covariance().amax() < 1e-8);
    }

    #[test]
    fn observation_noise_is_additive() {
        let multi = MultiGp::new(vec![model(&[0.0, 1.0], &[1.0, 2.0]), model(&[0.0, 1.0], &[3.0, 4.0])])
            .unwrap();
        let spec = multi.observation_dist(&[0.4], &[1.0, 1.0]).unwrap();
        let (_, var) = multi.models()[0].predict(&DMatrix::from_element(1, 1, 0.4)).unwrap();
        assert!(spec.covariance()[(0, 0)] >= 1.0 && spec.covariance()[(1, 1)] >= 1.0);
        assert!((spec.covariance()[(0, 0)] - (var[0] + 1.0)).abs() < 1e-14);
        assert_eq!(spec.covariance()[(0, 1)], 0.0);
    }

    #[test]
    fn mismatched_designs_are_rejected() {
        assert!(MultiGp::new(vec![model(&[0.0, 1.0], &[1.0, 2.0]), model(&[0.0, 0.5], &[1.0, 2.0])])
            .is_err());
    }
}
