//! Seeded property checks shared by the property tests and the acceptance
//! report. Each returns `Err` with a description of the first violation.

#![allow(dead_code)]

use gpnash::acquisition::{gamma_hat, simulated_equilibria, AcquisitionConfig, PeEvaluator, SurEvaluator};
use gpnash::game::{nash_extract, PayoffTensor, StrategyGrid};
use gpnash::gp::{foxy_update, simulate_paths, GpModel, Kernel, KernelFamily, MultiGp};
use gpnash::util::rng_from;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type Check = Result<String, String>;

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Pure equilibria by the definition: no player gains by deviating alone.
pub fn brute_force_equilibria(shape: &[usize], values: &DMatrix<f64>) -> Vec<usize> {
    let n: usize = shape.iter().product();
    let strides: Vec<usize> = shape
        .iter()
        .scan(1, |s, &m| {
            let out = *s;
            *s *= m;
            Some(out)
        })
        .collect();
    (0..n)
        .filter(|&k| {
            shape.iter().enumerate().all(|(i, &m)| {
                let own = (k / strides[i]) % m;
                let base = k - own * strides[i];
                (0..m).all(|a| values[(k, i)] <= values[(base + a * strides[i], i)])
            })
        })
        .collect()
}

pub fn random_tensor(rng: &mut ChaCha8Rng) -> (Vec<usize>, DMatrix<f64>) {
    let p = rng.random_range(2..=3);
    let shape: Vec<usize> = (0..p).map(|_| rng.random_range(2..=5)).collect();
    let n: usize = shape.iter().product();
    // Few distinct levels so that ties are common.
    let levels = rng.random_range(2..=6);
    let values = DMatrix::from_fn(n, p, |_, _| rng.random_range(0..levels) as f64);
    (shape, values)
}

pub fn nash_matches_brute_force(cases: usize, seed: u64) -> Check {
    let mut rng = rng_from(seed, &[1]);
    let mut total = 0;
    for case in 0..cases {
        let (shape, values) = random_tensor(&mut rng);
        let expected = brute_force_equilibria(&shape, &values);
        let tensor = PayoffTensor::new(shape.clone(), values).map_err(|e| e.to_string())?;
        let got = nash_extract(&tensor).indices;
        if got != expected {
            return Err(format!("case {case}, shape {shape:?}: got {got:?}, expected {expected:?}"));
        }
        total += got.len();
    }
    Ok(format!("{cases} tensors, {total} equilibria, all identical"))
}

/// A random posterior over a random factorial grid.
pub struct Posterior {
    pub grid: StrategyGrid,
    pub multi: MultiGp,
}

pub fn random_posterior(rng: &mut ChaCha8Rng, players: usize, max_actions: usize) -> Posterior {
    let actions: Vec<Vec<f64>> = (0..players)
        .map(|_| {
            let m = rng.random_range(2..=max_actions);
            (0..m).map(|k| (k as f64 + rng.random::<f64>() * 0.8) / m as f64).collect()
        })
        .collect();
    let grid = StrategyGrid::from_scalar_actions(&actions).unwrap();
    let n_obs = rng.random_range(2..=6);
    let x = DMatrix::from_fn(n_obs, players, |_, _| rng.random::<f64>());
    let models = (0..players)
        .map(|_| {
            let y = DVector::from_fn(n_obs, |_, _| normal(rng));
            let ls: Vec<f64> = (0..players).map(|_| rng.random_range(0.2..1.5)).collect();
            let kernel = Kernel::new(KernelFamily::Matern52, ls, rng.random_range(0.5..2.0));
            GpModel::condition(kernel, x.clone(), y, DVector::from_element(n_obs, 1e-4)).unwrap()
        })
        .collect();
    Posterior {
        grid,
        multi: MultiGp::new(models).unwrap(),
    }
}

/// `Σ_a P_i(a, x_-i) = 1` along every slice checked.
pub fn pi_partition(cases: usize, seed: u64, tol: f64) -> Check {
    let mut rng = rng_from(seed, &[2]);
    let cfg = AcquisitionConfig {
        cdf_switch: 20,
        ..AcquisitionConfig::default()
    };
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let players = rng.random_range(2..=3);
        let post = random_posterior(&mut rng, players, 5);
        let mut pe = PeEvaluator::full(&post.multi, &post.grid, &cfg).map_err(|e| e.to_string())?;
        let shape = post.grid.shape();
        let player = rng.random_range(0..shape.len());
        let mut tuple: Vec<usize> = shape.iter().map(|&m| rng.random_range(0..m)).collect();
        let mut sum = 0.0;
        for a in 0..shape[player] {
            tuple[player] = a;
            let k = post.grid.flat(&tuple).unwrap();
            sum += pe.player_prob(player, k).map_err(|e| e.to_string())?;
        }
        worst = worst.max((sum - 1.0).abs());
        if (sum - 1.0).abs() > tol {
            return Err(format!("case {case}: slice of player {player} sums to {sum}"));
        }
    }
    Ok(format!("{cases} slices, largest deviation {worst:.2e}"))
}

/// Exact-CDF `P_E` against the Monte-Carlo estimator with `mc_samples` draws.
pub fn pe_exact_vs_mc(cases: usize, seed: u64, mc_samples: usize, n_se: f64) -> Check {
    let mut rng = rng_from(seed, &[3]);
    let exact_cfg = AcquisitionConfig {
        cdf_switch: 20,
        cdf_accuracy: 1e-4,
        ..AcquisitionConfig::default()
    };
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let post = random_posterior(&mut rng, 2, 4);
        let mc_cfg = AcquisitionConfig {
            cdf_switch: 0,
            mc_samples,
            seed: rng.random(),
            ..AcquisitionConfig::default()
        };
        let k = rng.random_range(0..post.grid.size());
        let mut ex = PeEvaluator::full(&post.multi, &post.grid, &exact_cfg).map_err(|e| e.to_string())?;
        let mut mc = PeEvaluator::full(&post.multi, &post.grid, &mc_cfg).map_err(|e| e.to_string())?;
        let p: Vec<f64> = (0..2).map(|i| ex.player_prob(i, k).unwrap()).collect();
        let exact = p.iter().product::<f64>();
        let est = mc.evaluate(k).map_err(|e| e.to_string())?;
        // Delta-method variance of a product of independent proportions.
        let r = mc_samples as f64;
        let var: f64 = (0..2)
            .map(|i| {
                let others: f64 = (0..2).filter(|&j| j != i).map(|j| p[j]).product();
                others * others * p[i] * (1.0 - p[i]) / r
            })
            .sum();
        let se = (var + 1e-8).sqrt();
        let z = (est - exact).abs() / se;
        worst = worst.max(z);
        if z > n_se {
            return Err(format!("case {case}: exact {exact:.5}, Monte Carlo {est:.5}, {z:.2} standard errors"));
        }
    }
    Ok(format!("{cases} cases, largest gap {worst:.2} standard errors"))
}

/// Updated ensemble means against the exact posterior of the refitted model.
pub fn foxy_vs_refit(cases: usize, seed: u64, draws: usize, n_se: f64) -> Check {
    let mut rng = rng_from(seed, &[4]);
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let d = rng.random_range(1..=2);
        let n_obs = rng.random_range(2..=5);
        let x = DMatrix::from_fn(n_obs, d, |_, _| rng.random::<f64>());
        let noisy = case % 2 == 1;
        let obs_noise = if noisy { 0.05 } else { 1e-10 };
        let models: Vec<GpModel> = (0..2)
            .map(|_| {
                let y = DVector::from_fn(n_obs, |_, _| normal(&mut rng));
                let ls: Vec<f64> = (0..d).map(|_| rng.random_range(0.2..0.8)).collect();
                let kernel = Kernel::new(KernelFamily::Matern52, ls, 1.0);
                GpModel::condition(kernel, x.clone(), y, DVector::from_element(n_obs, obs_noise)).unwrap()
            })
            .collect();
        let multi = MultiGp::new(models.clone()).unwrap();
        let n_sim = 8;
        let coords = DMatrix::from_fn(n_sim, d, |_, _| rng.random::<f64>());
        let ens = simulate_paths(&multi, &(0..n_sim).collect::<Vec<_>>(), &coords, draws, rng.random())
            .map_err(|e| e.to_string())?;
        // Half of the cases observe a simulation point.
        let x_new: Vec<f64> = if case % 4 < 2 {
            coords.row(rng.random_range(0..n_sim)).iter().copied().collect()
        } else {
            (0..d).map(|_| rng.random::<f64>()).collect()
        };
        let tau2 = if noisy { 0.1 } else { 0.0 };
        let f_new: Vec<f64> = (0..2).map(|_| normal(&mut rng)).collect();
        let updated = foxy_update(&ens, &multi, &x_new, &f_new, &[tau2; 2]).map_err(|e| e.to_string())?;
        for (i, model) in models.iter().enumerate() {
            let refit = model.with_observation(&x_new, f_new[i], tau2.max(1e-10)).unwrap();
            let (mu, _) = refit.predict(&coords).unwrap();
            for k in 0..n_sim {
                let vals: Vec<f64> = updated.draws.iter().map(|m| m[(k, i)]).collect();
                let mean = vals.iter().sum::<f64>() / draws as f64;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
                let se = (var / draws as f64).sqrt().max(1e-6);
                let z = (mean - mu[k]).abs() / se;
                worst = worst.max(z);
                if z > n_se {
                    return Err(format!(
                        "case {case}, objective {i}, point {k}: ensemble mean {mean:.5}, exact {:.5} ({z:.2} standard errors)",
                        mu[k]
                    ));
                }
            }
        }
    }
    Ok(format!("{cases} cases, largest gap {worst:.2} standard errors"))
}

/// At a noise-free observed point a new evaluation carries no information.
pub fn j_no_information(cases: usize, seed: u64, tol: f64) -> Check {
    let mut rng = rng_from(seed, &[5]);
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let grid = StrategyGrid::from_scalar_actions(&[vec![0.0, 0.5, 1.0], vec![0.0, 0.5, 1.0]]).unwrap();
        let all: Vec<usize> = (0..grid.size()).collect();
        let coords = grid.points(&all);
        let observed = rng.random_range(0..9);
        let mut x = DMatrix::zeros(2, 2);
        x.set_row(0, &coords.row(observed));
        x.row_mut(1).copy_from_slice(&[rng.random::<f64>(), rng.random::<f64>()]);
        let models = (0..2)
            .map(|_| {
                let y = DVector::from_fn(2, |_, _| normal(&mut rng));
                let kernel = Kernel::new(KernelFamily::Matern52, vec![0.6, 0.6], 1.0);
                GpModel::condition(kernel, x.clone(), y, DVector::zeros(2)).unwrap()
            })
            .collect();
        let multi = MultiGp::new(models).unwrap();
        let ens = simulate_paths(&multi, &all, &coords, 50, rng.random()).map_err(|e| e.to_string())?;
        let cfg = AcquisitionConfig::default();
        let mut sur = SurEvaluator::new(&multi, &ens, &grid.shape(), &[0.0, 0.0], &cfg, rng.random())
            .map_err(|e| e.to_string())?;
        let base = simulated_equilibria(&ens, &grid.shape()).map_err(|e| e.to_string())?.gamma();
        let at_obs: Vec<f64> = coords.row(observed).iter().copied().collect();
        let j = sur.evaluate(&at_obs).map_err(|e| e.to_string())?;
        worst = worst.max((j - base).abs());
        if (j - base).abs() > tol {
            return Err(format!("case {case}: J = {j}, base Gamma = {base}"));
        }
    }
    Ok(format!("{cases} cases, largest difference {worst:.1e}"))
}

/// `Γ̂(A y + b) = det(A)² Γ̂(y)`.
pub fn gamma_affine(cases: usize, seed: u64, rel_tol: f64) -> Check {
    let mut rng = rng_from(seed, &[6]);
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let p = rng.random_range(1..=4);
        let n = rng.random_range(p + 2..=30);
        let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| normal(&mut rng)).collect()).collect();
        let a = DMatrix::from_fn(p, p, |_, _| normal(&mut rng));
        let b: Vec<f64> = (0..p).map(|_| 10.0 * normal(&mut rng)).collect();
        let mapped: Vec<Vec<f64>> = pts
            .iter()
            .map(|y| {
                let v = &a * DVector::from_column_slice(y);
                v.iter().zip(&b).map(|(v, b)| v + b).collect()
            })
            .collect();
        let expected = a.determinant().powi(2) * gamma_hat(&pts);
        let got = gamma_hat(&mapped);
        let rel = (got - expected).abs() / expected.abs().max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
        if rel > rel_tol {
            return Err(format!("case {case}: {got} against {expected}"));
        }
    }
    Ok(format!("{cases} maps, largest relative error {worst:.1e}"))
}
