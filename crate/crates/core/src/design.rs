//! Space-filling designs.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::util::rng_from;

/// Number of random Latin hypercubes compared by [`maximin_lhd`].
pub const DEFAULT_LHD_TRIES: usize = 100;

/// Random Latin hypercube of `n` points in `[0,1]^d`, one row per point.
pub fn random_lhd<R: Rng>(n: usize, d: usize, rng: &mut R) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, d);
    let mut perm: Vec<usize> = (0..n).collect();
    for c in 0..d {
        perm.shuffle(rng);
        for (r, &k) in perm.iter().enumerate() {
            m[(r, c)] = (k as f64 + rng.random::<f64>()) / n as f64;
        }
    }
    m
}

/// Smallest pairwise Euclidean distance between rows.
pub fn min_distance(points: &DMatrix<f64>) -> f64 {
    let n = points.nrows();
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in 0..i {
            let d2: f64 = points
                .row(i)
                .iter()
                .zip(points.row(j).iter())
                .map(|(a, b)| (a - b).powi(2))
                .sum();
            best = best.min(d2);
        }
    }
    best.sqrt()
}

/// Best of `tries` random Latin hypercubes under the maximin criterion.
pub fn maximin_lhd(n: usize, d: usize, tries: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rng_from(seed, &[n as u64, d as u64]);
    let mut best = random_lhd(n, d, &mut rng);
    let mut score = min_distance(&best);
    for _ in 1..tries {
        let cand = random_lhd(n, d, &mut rng);
        let s = min_distance(&cand);
        if s > score {
            best = cand;
            score = s;
        }
    }
    best
}
