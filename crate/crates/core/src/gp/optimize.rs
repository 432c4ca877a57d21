//! Box-constrained quasi-Newton minimization used for likelihood fitting.

use nalgebra::{DMatrix, DVector};

/// Minimizes `f` over the box `[lower, upper]` with projected BFGS and
/// Armijo backtracking. `f` returns `None` where it is undefined; such
/// points are treated as infinitely bad.
pub(crate) fn minimize_box<F>(
    mut f: F,
    start: &[f64],
    lower: &[f64],
    upper: &[f64],
    max_iter: usize,
) -> (Vec<f64>, f64)
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let n = start.len();
    let clamp = |x: &DVector<f64>| -> DVector<f64> {
        DVector::from_iterator(n, (0..n).map(|i| x[i].clamp(lower[i], upper[i])))
    };
    let mut x = clamp(&DVector::from_column_slice(start));
    let Some((mut fx, g)) = f(x.as_slice()) else {
        return (x.as_slice().to_vec(), f64::INFINITY);
    };
    let mut g = DVector::from_vec(g);
    let mut h = DMatrix::<f64>::identity(n, n);

    for _ in 0..max_iter {
        // Freeze coordinates pinned at a bound by the gradient.
        let free: Vec<bool> = (0..n)
            .map(|i| !((x[i] <= lower[i] && g[i] > 0.0) || (x[i] >= upper[i] && g[i] < 0.0)))
            .collect();
        let proj_grad_norm = (0..n)
            .filter(|&i| free[i])
            .map(|i| g[i] * g[i])
            .sum::<f64>()
            .sqrt();
        if proj_grad_norm < 1e-7 {
            break;
        }
        let mut dir = -(&h * &g);
        for i in 0..n {
            if !free[i] {
                dir[i] = 0.0;
            }
        }
        if dir.dot(&g) >= 0.0 {
            h = DMatrix::identity(n, n);
            dir = DVector::from_iterator(n, (0..n).map(|i| if free[i] { -g[i] } else { 0.0 }));
        }
        let norm = dir.norm();
        if norm > 3.0 {
            dir *= 3.0 / norm;
        }

        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-10 {
            let trial = clamp(&(&x + &dir * t));
            if let Some((ft, gt)) = f(trial.as_slice()) {
                if ft.is_finite() && ft <= fx + 1e-4 * g.dot(&(&trial - &x)) {
                    accepted = Some((trial, ft, DVector::from_vec(gt)));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            break;
        };
        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        let improvement = fx - f_new;
        x = x_new;
        fx = f_new;
        g = g_new;
        if sy > 1e-12 {
            let rho = 1.0 / sy;
            let eye = DMatrix::<f64>::identity(n, n);
            let left = &eye - &s * y.transpose() * rho;
            let right = &eye - &y * s.transpose() * rho;
            h = &left * &h * &right + &s * s.transpose() * rho;
        }
        if improvement.abs() < 1e-10 * (1.0 + fx.abs()) {
            break;
        }
    }
    (x.as_slice().to_vec(), fx)
}
