//! Fixed reference values computed with independent tools.

use std::f64::consts::PI;

use approx::assert_relative_eq;
use gpnash::acquisition::select_subset;
use gpnash::game::StrategyGrid;
use gpnash::gp::{GpModel, Kernel, KernelFamily};
use gpnash::mvn::{mvn_cdf_at_zero, GaussianSpec};
use gpnash::util::norm_cdf;
use nalgebra::{DMatrix, DVector};

fn design() -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let x = DMatrix::from_row_slice(4, 2, &[0.1, 0.2, 0.5, 0.9, 0.8, 0.3, 0.3, 0.6]);
    let y = DVector::from_column_slice(&[1.0, -0.5, 0.7, 0.2]);
    let xs = DMatrix::from_row_slice(3, 2, &[0.2, 0.3, 0.9, 0.9, 0.5, 0.5]);
    (x, y, xs)
}

// Reference: scikit-learn GaussianProcessRegressor with a fixed kernel.
#[test]
fn matern_posterior_matches_reference() {
    let (x, y, xs) = design();
    let kernel = Kernel::new(KernelFamily::Matern52, vec![0.4, 0.7], 1.7);
    let gp = GpModel::condition(kernel, x, y, DVector::from_element(4, 1e-2)).unwrap();
    let (mu, var) = gp.predict(&xs).unwrap();
    let mu_ref = [0.829379403633815, 0.031053962120934697, 0.19299088473329973];
    let cov_ref = [
        0.07930380002940685,
        0.005296001477013673,
        0.036037858341496865,
        0.005296001477013673,
        0.902572316916602,
        -0.052388871718059615,
        0.036037858341496865,
        -0.052388871718059615,
        0.2781075999655278,
    ];
    let cov = gp.predict_cov(&xs, &xs).unwrap();
    for i in 0..3 {
        assert_relative_eq!(mu[i], mu_ref[i], epsilon = 1e-9);
        assert_relative_eq!(var[i], cov_ref[4 * i], epsilon = 1e-9);
        for j in 0..3 {
            assert_relative_eq!(cov[(i, j)], cov_ref[3 * i + j], epsilon = 1e-9);
        }
    }
}

#[test]
fn squared_exponential_interpolation_matches_reference() {
    let (x, y, xs) = design();
    let kernel = Kernel::new(KernelFamily::SquaredExponential, vec![0.3, 0.5], 0.8);
    let gp = GpModel::condition(kernel, x.clone(), y.clone(), DVector::zeros(4)).unwrap();
    let (mu, var) = gp.predict(&xs).unwrap();
    let mu_ref = [0.8561077746259437, 0.04217342005944069, 0.20428890668796218];
    let var_ref = [0.02750497701343657, 0.5141571555845997, 0.14606345365022166];
    for i in 0..3 {
        assert_relative_eq!(mu[i], mu_ref[i], epsilon = 1e-7);
        assert_relative_eq!(var[i], var_ref[i], epsilon = 1e-7);
    }
    // Noise-free data are interpolated.
    let (mu_x, var_x) = gp.predict(&x).unwrap();
    for i in 0..4 {
        assert_relative_eq!(mu_x[i], y[i], epsilon = 1e-6);
        assert!(var_x[i] < 1e-6);
    }
}

#[test]
fn bivariate_orthant_probability() {
    for rho in [-0.9, -0.4, 0.0, 0.3, 0.8] {
        let spec = GaussianSpec::from_slices(&[0.0, 0.0], &[1.0, rho, rho, 1.0]).unwrap();
        let got = mvn_cdf_at_zero(&spec, 1e-5).unwrap().value;
        assert_relative_eq!(got, 0.25 + rho.asin() / (2.0 * PI), epsilon = 1e-4);
    }
}

#[test]
fn trivariate_equicorrelated_orthant_probability() {
    for rho in [-0.3, 0.2, 0.7] {
        let cov = [1.0, rho, rho, rho, 1.0, rho, rho, rho, 1.0];
        let spec = GaussianSpec::from_slices(&[0.0; 3], &cov).unwrap();
        let got = mvn_cdf_at_zero(&spec, 1e-5).unwrap().value;
        assert_relative_eq!(got, 0.125 + 3.0 * rho.asin() / (4.0 * PI), epsilon = 2e-4);
    }
}

#[test]
fn independent_shifted_coordinates_factorize() {
    let mean = [0.3, -1.2, 0.5, 0.0];
    let var = [0.5, 2.0, 1.0, 3.0];
    let spec = GaussianSpec::diagonal(&mean, &var).unwrap();
    let expected: f64 = mean.iter().zip(&var).map(|(m, v)| norm_cdf(-m / v.sqrt())).product();
    let got = mvn_cdf_at_zero(&spec, 1e-5).unwrap().value;
    assert_relative_eq!(got, expected, epsilon = 1e-4);
}

/// Subsets of `{1,2,3,4}` of size two drawn by successive sampling
/// proportional to `w`.
fn pair_probability(w: &[f64], a: usize, b: usize) -> f64 {
    let total: f64 = w.iter().sum();
    w[a] / total * w[b] / (total - w[a]) + w[b] / total * w[a] / (total - w[b])
}

#[test]
fn subset_sampling_follows_successive_draws() {
    let scores = [4.0, 1.0, 2.0, 0.5, 3.0];
    let grid = StrategyGrid::from_scalar_actions(&[vec![0.0, 1.0, 2.0, 3.0, 4.0]]).unwrap();
    let draws = 20_000;
    let mut counts = [[0usize; 5]; 5];
    for seed in 0..draws {
        let sub = select_subset(&grid, &scores, 3, seed).unwrap();
        let sel = &sub.selection()[0];
        assert_eq!(sel.len(), 3);
        assert!(sel.contains(&0), "the best action is always kept");
        let others: Vec<usize> = sel.iter().copied().filter(|&k| k != 0).collect();
        counts[others[0]][others[1]] += 1;
    }
    let w = [0.0, 1.0, 2.0, 0.5, 3.0];
    for a in 1..5 {
        for b in a + 1..5 {
            let p = pair_probability(&w[1..], a - 1, b - 1);
            let freq = counts[a][b] as f64 / draws as f64;
            let se = (p * (1.0 - p) / draws as f64).sqrt();
            assert!((freq - p).abs() < 4.0 * se, "pair ({a},{b}): {freq} against {p}");
        }
    }
}
