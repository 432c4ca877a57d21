use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::grid::StrategyGrid;
use crate::error::{invalid, Result};

/// Objective values of every player at every grid point, `N × p`.
///
/// Entries may be `+∞` (a point that can never be a best response) but not NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffTensor {
    shape: Vec<usize>,
    values: DMatrix<f64>,
}

impl PayoffTensor {
    pub fn new(shape: Vec<usize>, values: DMatrix<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if shape.is_empty() || shape.contains(&0) {
            return Err(invalid("tensor shape must be non-empty with positive extents"));
        }
        if values.nrows() != n {
            return Err(invalid(format!(
                "tensor has {} rows for a grid of {n} points",
                values.nrows()
            )));
        }
        if values.ncols() != shape.len() {
            return Err(invalid(format!(
                "tensor has {} columns for {} players",
                values.ncols(),
                shape.len()
            )));
        }
        if values.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
            return Err(invalid("tensor values must not be NaN or -inf"));
        }
        Ok(Self { shape, values })
    }

    pub fn from_grid(grid: &StrategyGrid, values: DMatrix<f64>) -> Result<Self> {
        Self::new(grid.shape(), values)
    }

    /// Evaluates `f` at every grid point.
    pub fn evaluate<F>(grid: &StrategyGrid, mut f: F) -> Result<Self>
    where
        F: FnMut(&[f64]) -> Result<Vec<f64>>,
    {
        let p = grid.n_players();
        let mut values = DMatrix::zeros(grid.size(), p);
        for k in 0..grid.size() {
            let y = f(&grid.point(k))?;
            if y.len() != p {
                return Err(invalid(format!("objective returned {} values for {p} players", y.len())));
            }
            for (i, v) in y.into_iter().enumerate() {
                values[(k, i)] = v;
            }
        }
        Self::from_grid(grid, values)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn n_players(&self) -> usize {
        self.shape.len()
    }
}

/// Pure Nash equilibria of a payoff tensor.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NashOutcome {
    /// Flat grid indices, ascending.
    pub indices: Vec<usize>,
    /// Objective vectors at those indices.
    pub values: Vec<Vec<f64>>,
}

impl NashOutcome {
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    /// Componentwise mean of the equilibrium values.
    pub fn representative(&self) -> Option<Vec<f64>> {
        let first = self.values.first()?;
        let mut mean = vec![0.0; first.len()];
        for v in &self.values {
            for (m, x) in mean.iter_mut().zip(v) {
                *m += x;
            }
        }
        let n = self.values.len() as f64;
        Some(mean.into_iter().map(|m| m / n).collect())
    }
}

/// Reusable buffer for repeated extractions on tensors of the same shape.
#[derive(Debug, Default)]
pub(crate) struct NashScratch {
    marks: Vec<u8>,
}

impl NashScratch {
    /// Marks every point with the number of players for which it is a best response.
    fn sweep(&mut self, shape: &[usize], values: &DMatrix<f64>) {
        let n = values.nrows();
        self.marks.clear();
        self.marks.resize(n, 0);
        let mut stride = 1;
        for (i, &m) in shape.iter().enumerate() {
            let col = values.column(i);
            let col = col.as_slice();
            let block = stride * m;
            for outer in (0..n).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    let best = (0..m)
                        .map(|k| col[base + k * stride])
                        .fold(f64::INFINITY, f64::min);
                    if best == f64::INFINITY {
                        continue;
                    }
                    for k in 0..m {
                        let idx = base + k * stride;
                        if col[idx] == best && self.marks[idx] as usize == i {
                            self.marks[idx] += 1;
                        }
                    }
                }
            }
            stride = block;
        }
    }

    fn equilibria<'a>(&'a self, p: usize) -> impl Iterator<Item = usize> + 'a {
        self.marks
            .iter()
            .enumerate()
            .filter(move |(_, &c)| c as usize == p)
            .map(|(k, _)| k)
    }

    /// Componentwise mean of the NE values of `values`, if any NE exists.
    pub(crate) fn representative(
        &mut self,
        shape: &[usize],
        values: &DMatrix<f64>,
    ) -> Option<Vec<f64>> {
        self.sweep(shape, values);
        let p = shape.len();
        let mut sum = vec![0.0; p];
        let mut count = 0usize;
        for k in self.equilibria(p) {
            for (i, s) in sum.iter_mut().enumerate() {
                *s += values[(k, i)];
            }
            count += 1;
        }
        (count > 0).then(|| sum.into_iter().map(|s| s / count as f64).collect())
    }

    pub(crate) fn indices(&mut self, shape: &[usize], values: &DMatrix<f64>) -> Vec<usize> {
        self.sweep(shape, values);
        self.equilibria(shape.len()).collect()
    }
}

/// All pure Nash equilibria, ties included.
pub fn nash_extract(tensor: &PayoffTensor) -> NashOutcome {
    let indices = NashScratch::default().indices(&tensor.shape, &tensor.values);
    let values = indices
        .iter()
        .map(|&k| tensor.values.row(k).iter().copied().collect())
        .collect();
    NashOutcome { indices, values }
}

/// Minimizers of player `player`'s objective over their own actions, with
/// the other players' actions fixed to `opponents` (in player order).
pub fn best_response(tensor: &PayoffTensor, player: usize, opponents: &[usize]) -> Result<Vec<usize>> {
    let p = tensor.n_players();
    if player >= p {
        return Err(invalid(format!("player {player} out of range for {p} players")));
    }
    if opponents.len() + 1 != p {
        return Err(invalid(format!(
            "expected {} opponent actions, got {}",
            p - 1,
            opponents.len()
        )));
    }
    let mut base = 0;
    let mut stride = 1;
    let mut own_stride = 1;
    let mut opp = opponents.iter();
    for (i, &m) in tensor.shape.iter().enumerate() {
        if i == player {
            own_stride = stride;
        } else {
            let &k = opp.next().expect("length checked");
            if k >= m {
                return Err(invalid(format!(
                    "action {k} out of range for player {i} ({m} actions)"
                )));
            }
            base += k * stride;
        }
        stride *= m;
    }
    let col = tensor.values.column(player);
    let slice: Vec<f64> = (0..tensor.shape[player])
        .map(|k| col[base + k * own_stride])
        .collect();
    let best = slice.iter().copied().fold(f64::INFINITY, f64::min);
    if best == f64::INFINITY {
        return Ok(Vec::new());
    }
    Ok(slice
        .iter()
        .enumerate()
        .filter(|(_, &v)| v == best)
        .map(|(k, _)| k)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tensor(shape: &[usize], rows: &[[f64; 2]]) -> PayoffTensor {
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        PayoffTensor::new(shape.to_vec(), DMatrix::from_row_slice(rows.len(), 2, &flat)).unwrap()
    }

    #[test]
    fn matching_pennies_has_no_pure_equilibrium() {
        // Player 0 wants to match, player 1 wants to differ.
        let t = tensor(
            &[2, 2],
            &[[0.0, 1.0], [1.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
        );
        assert!(nash_extract(&t).is_empty());
    }

    #[test]
    fn total_indifference_makes_every_point_an_equilibrium() {
        let t = tensor(&[2, 3], &[[1.0, 2.0]; 6]);
        assert_eq!(nash_extract(&t).indices, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn prisoners_dilemma() {
        // Costs (years in prison); action 1 = defect. Index = a0 + 2 a1.
        let t = tensor(
            &[2, 2],
            &[[1.0, 1.0], [0.0, 3.0], [3.0, 0.0], [2.0, 2.0]],
        );
        let ne = nash_extract(&t);
        assert_eq!(ne.indices, vec![3]);
        assert_eq!(ne.values, vec![vec![2.0, 2.0]]);
    }

    #[test]
    fn infinite_slice_yields_no_best_response() {
        let t = tensor(
            &[2, 2],
            &[
                [f64::INFINITY, 0.0],
                [f64::INFINITY, 0.0],
                [1.0, 1.0],
                [0.0, 0.0],
            ],
        );
        assert!(best_response(&t, 0, &[0]).unwrap().is_empty());
        assert_eq!(nash_extract(&t).indices, vec![3]);
    }

    #[test]
    fn best_response_slices() {
        let t = tensor(
            &[3, 2],
            &[
                [1.0, 0.0],
                [2.0, 0.0],
                [3.0, 0.0],
                [5.0, 0.0],
                [5.0, 0.0],
                [5.0, 0.0],
            ],
        );
        assert_eq!(best_response(&t, 0, &[0]).unwrap(), vec![0]);
        assert_eq!(best_response(&t, 0, &[1]).unwrap(), vec![0, 1, 2]);
        assert_eq!(best_response(&t, 1, &[2]).unwrap(), vec![0, 1]);
        assert!(best_response(&t, 0, &[2]).is_err());
        assert!(best_response(&t, 2, &[0]).is_err());
    }

    #[test]
    fn nan_is_rejected() {
        let v = DMatrix::from_element(4, 2, f64::NAN);
        assert!(PayoffTensor::new(vec![2, 2], v).is_err());
    }

    #[test]
    fn representative_averages_ties() {
        let t = tensor(&[2, 1], &[[0.0, 1.0], [0.0, 3.0]]);
        let ne = nash_extract(&t);
        assert_eq!(ne.representative(), Some(vec![0.0, 2.0]));
    }
}
