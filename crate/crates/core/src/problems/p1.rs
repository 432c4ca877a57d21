use std::f64::consts::PI;

use super::GameProblem;
use crate::error::{invalid, Error, Result};

/// Two-player toy game on `[-5, 10] × [0, 15]`: a Branin-type cost for
/// player 1 and a coupled square-root cost for player 2.
#[derive(Debug, Clone, Copy, Default)]
pub struct P1;

pub const P1_BOUNDS: [(f64, f64); 2] = [(-5.0, 10.0), (0.0, 15.0)];

pub fn p1_evaluate(x1: f64, x2: f64) -> Result<(f64, f64)> {
    let c = 1.0 - 1.0 / (8.0 * PI);
    let quad = 5.1 * (x1 / (2.0 * PI)).powi(2);
    let y1 = (x2 - quad + 5.0 / PI * x1 - 6.0).powi(2) + 10.0 * (c * x1.cos() + 1.0);
    let radicand = (10.5 - x1) * (x1 + 5.5) * (x2 + 0.5);
    if radicand < 0.0 {
        return Err(Error::Evaluation {
            x: vec![x1, x2],
            message: format!("negative radicand {radicand:e} outside the domain"),
        });
    }
    let y2 = -radicand.sqrt() - (x2 - quad - 6.0).powi(2) / 30.0 - (c * x1.cos() + 1.0) / 3.0;
    Ok((y1, y2))
}

impl GameProblem for P1 {
    fn name(&self) -> String {
        "p1".into()
    }

    fn block_dims(&self) -> Vec<usize> {
        vec![1, 1]
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        P1_BOUNDS.to_vec()
    }

    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != 2 {
            return Err(invalid(format!("P1 takes 2 inputs, got {}", x.len())));
        }
        let (y1, y2) = p1_evaluate(x[0], x[1])?;
        Ok(vec![y1, y2])
    }
}
