//! The fixed-point baseline over several starting points.

use gpnash::game::{check_equilibrium, fixed_point_solve, EquilibriumCheck, FixedPointResult};
use gpnash::problems::GameProblem;
use gpnash::util::rng_from;
use rand::Rng;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::experiment::BaselineSpec;
use crate::runner::par_map;

const START_TAG: u64 = 0x57A7;

#[derive(Debug, Clone, Serialize)]
pub struct BaselineRun {
    pub start: Vec<f64>,
    pub result: FixedPointResult,
    /// Unilateral-deviation check of the end point.
    pub check: EquilibriumCheck,
}

/// `n` starting points drawn uniformly in the box.
pub fn random_starts(bounds: &[(f64, f64)], n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng_from(seed, &[START_TAG]);
    (0..n)
        .map(|_| bounds.iter().map(|&(lo, hi)| lo + (hi - lo) * rng.random::<f64>()).collect())
        .collect()
}

pub fn run_baseline(problem: &dyn GameProblem, spec: &BaselineSpec, jobs: usize) -> CliResult<Vec<BaselineRun>> {
    let bounds = problem.bounds();
    let dims = problem.block_dims();
    let starts = match &spec.start_points {
        Some(points) => {
            if let Some(bad) = points.iter().find(|s| s.len() != bounds.len()) {
                return Err(CliError::Usage(format!(
                    "start point {bad:?} has {} coordinates, expected {}",
                    bad.len(),
                    bounds.len()
                )));
            }
            points.clone()
        }
        None => random_starts(&bounds, spec.starts, spec.seed),
    };
    par_map(&starts, jobs, |k, start| {
        let context = |e: gpnash::Error| CliError::Runtime(format!("start {k}: {e}"));
        let result = fixed_point_solve(|x| problem.evaluate(x), &bounds, &dims, start, &spec.solver).map_err(context)?;
        let check = check_equilibrium(
            |x| problem.evaluate(x),
            &bounds,
            &dims,
            &result.x,
            spec.check_points,
            spec.check_tol,
        )
        .map_err(context)?;
        Ok(BaselineRun {
            start: start.clone(),
            result,
            check,
        })
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use gpnash::problems::P1_BOUNDS;

    #[test]
    fn starts_are_inside_the_box_and_seeded() {
        let a = random_starts(&P1_BOUNDS, 5, 7);
        assert_eq!(a, random_starts(&P1_BOUNDS, 5, 7));
        assert_ne!(a, random_starts(&P1_BOUNDS, 5, 8));
        for s in &a {
            assert!((-5.0..=10.0).contains(&s[0]) && (0.0..=15.0).contains(&s[1]));
        }
    }
}
