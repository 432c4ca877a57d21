use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Largest grid accepted by default.
pub const DEFAULT_MAX_GRID_SIZE: usize = 10_000_000;

/// A full-factorial strategy space `X_1 × … × X_p`.
///
/// Only the per-player action lists are stored; grid points are addressed
/// by a flat index in mixed radix with player 0 varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyGrid {
    actions: Vec<DMatrix<f64>>,
    strides: Vec<usize>,
    size: usize,
}

impl StrategyGrid {
    pub fn new(actions: Vec<DMatrix<f64>>) -> Result<Self> {
        Self::with_limit(actions, DEFAULT_MAX_GRID_SIZE)
    }

    pub fn with_limit(actions: Vec<DMatrix<f64>>, max_size: usize) -> Result<Self> {
        if actions.is_empty() {
            return Err(invalid("a grid needs at least one player"));
        }
        let mut strides = Vec::with_capacity(actions.len());
        let mut size = 1usize;
        for (i, a) in actions.iter().enumerate() {
            if a.nrows() == 0 || a.ncols() == 0 {
                return Err(invalid(format!("player {i} has an empty action set")));
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(invalid(format!("player {i} has a non-finite action")));
            }
            for r in 0..a.nrows() {
                for s in 0..r {
                    if a.row(r) == a.row(s) {
                        return Err(invalid(format!(
                            "player {i} has duplicate actions {s} and {r}"
                        )));
                    }
                }
            }
            strides.push(size);
            size = size
                .checked_mul(a.nrows())
                .filter(|&n| n <= max_size)
                .ok_or_else(|| invalid(format!("grid exceeds the size limit of {max_size}")))?;
        }
        Ok(Self {
            actions,
            strides,
            size,
        })
    }

    /// Grid of scalar actions, one list per player.
    pub fn from_scalar_actions(lists: &[Vec<f64>]) -> Result<Self> {
        Self::new(
            lists
                .iter()
                .map(|l| DMatrix::from_column_slice(l.len(), 1, l))
                .collect(),
        )
    }

    pub fn n_players(&self) -> usize {
        self.actions.len()
    }

    /// Number of actions per player.
    pub fn shape(&self) -> Vec<usize> {
        self.actions.iter().map(|a| a.nrows()).collect()
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.actions.iter().map(|a| a.ncols()).collect()
    }

    /// Total input dimension.
    pub fn dim(&self) -> usize {
        self.actions.iter().map(|a| a.ncols()).sum()
    }

    pub fn actions(&self, player: usize) -> &DMatrix<f64> {
        &self.actions[player]
    }

    pub fn tuple(&self, flat: usize) -> Vec<usize> {
        self.actions
            .iter()
            .zip(&self.strides)
            .map(|(a, s)| (flat / s) % a.nrows())
            .collect()
    }

    pub fn flat(&self, tuple: &[usize]) -> Result<usize> {
        if tuple.len() != self.n_players() {
            return Err(invalid(format!(
                "action tuple has {} entries for {} players",
                tuple.len(),
                self.n_players()
            )));
        }
        let mut flat = 0;
        for (i, (&k, a)) in tuple.iter().zip(&self.actions).enumerate() {
            if k >= a.nrows() {
                return Err(invalid(format!(
                    "action {k} out of range for player {i} ({} actions)",
                    a.nrows()
                )));
            }
            flat += k * self.strides[i];
        }
        Ok(flat)
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.dim());
        for (a, s) in self.actions.iter().zip(&self.strides) {
            let k = (flat / s) % a.nrows();
            x.extend(a.row(k).iter());
        }
        x
    }

    /// Coordinates of the given grid points, one row each.
    pub fn points(&self, indices: &[usize]) -> DMatrix<f64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(indices.len(), d);
        for (r, &idx) in indices.iter().enumerate() {
            for (c, v) in self.point(idx).into_iter().enumerate() {
                m[(r, c)] = v;
            }
        }
        m
    }

    /// Per-coordinate range spanned by the actions.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.actions
            .iter()
            .flat_map(|a| {
                a.column_iter()
                    .map(|c| (c.min(), c.max()))
                    .collect::<Vec<_>>()
            })
            .collect()
    }

    /// Index of the player's action nearest to `coords` (Euclidean).
    pub fn nearest_action(&self, player: usize, coords: &[f64]) -> usize {
        let a = &self.actions[player];
        (0..a.nrows())
            .map(|r| {
                let d: f64 = a.row(r).iter().zip(coords).map(|(x, y)| (x - y).powi(2)).sum();
                (r, d)
            })
            .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
            .0
    }

    /// Grid point whose blocks are each nearest to the blocks of `x`.
    pub fn nearest_point(&self, x: &[f64]) -> usize {
        let mut offset = 0;
        let mut tuple = Vec::with_capacity(self.n_players());
        for (i, a) in self.actions.iter().enumerate() {
            tuple.push(self.nearest_action(i, &x[offset..offset + a.ncols()]));
            offset += a.ncols();
        }
        self.flat(&tuple).expect("nearest actions are in range")
    }

    /// Largest distance from an action to its nearest other action, per player.
    pub fn action_spacing(&self) -> Vec<f64> {
        self.actions
            .iter()
            .map(|a| {
                let m = a.nrows();
                if m < 2 {
                    return 0.0;
                }
                (0..m)
                    .map(|r| {
                        (0..m)
                            .filter(|&s| s != r)
                            .map(|s| (a.row(r) - a.row(s)).norm())
                            .fold(f64::INFINITY, f64::min)
                    })
                    .fold(0.0, f64::max)
            })
            .collect()
    }

    pub fn subgrid(&self, selection: Vec<Vec<usize>>) -> Result<SubGrid> {
        SubGrid::new(self, selection)
    }
}

/// A factorial subset of a [`StrategyGrid`]: a subset of actions per player.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubGrid {
    selection: Vec<Vec<usize>>,
}

impl SubGrid {
    pub fn new(parent: &StrategyGrid, mut selection: Vec<Vec<usize>>) -> Result<Self> {
        if selection.len() != parent.n_players() {
            return Err(invalid("sub-grid selection must list every player"));
        }
        for (i, s) in selection.iter_mut().enumerate() {
            s.sort_unstable();
            s.dedup();
            if s.is_empty() {
                return Err(invalid(format!("sub-grid selects no action for player {i}")));
            }
            if s.last().is_some_and(|&k| k >= parent.actions(i).nrows()) {
                return Err(invalid(format!("sub-grid action out of range for player {i}")));
            }
        }
        Ok(Self { selection })
    }

    pub fn full(parent: &StrategyGrid) -> Self {
        Self {
            selection: parent.shape().into_iter().map(|m| (0..m).collect()).collect(),
        }
    }

    pub fn selection(&self) -> &[Vec<usize>] {
        &self.selection
    }

    pub fn shape(&self) -> Vec<usize> {
        self.selection.iter().map(Vec::len).collect()
    }

    pub fn size(&self) -> usize {
        self.selection.iter().map(Vec::len).product()
    }

    /// Parent flat index of the sub-grid point `sub_flat`.
    pub fn parent_index(&self, parent: &StrategyGrid, sub_flat: usize) -> usize {
        let mut rest = sub_flat;
        let mut tuple = Vec::with_capacity(self.selection.len());
        for s in &self.selection {
            tuple.push(s[rest % s.len()]);
            rest /= s.len();
        }
        parent.flat(&tuple).expect("selection is in range")
    }

    pub fn parent_indices(&self, parent: &StrategyGrid) -> Vec<usize> {
        (0..self.size()).map(|k| self.parent_index(parent, k)).collect()
    }

    /// Sub-grid flat index of a parent grid point, if it belongs to the sub-grid.
    pub fn position_of(&self, parent: &StrategyGrid, parent_flat: usize) -> Option<usize> {
        let tuple = parent.tuple(parent_flat);
        let mut flat = 0;
        let mut stride = 1;
        for (s, k) in self.selection.iter().zip(tuple) {
            flat += s.binary_search(&k).ok()? * stride;
            stride *= s.len();
        }
        Some(flat)
    }

    /// The sub-grid as a standalone grid.
    pub fn to_grid(&self, parent: &StrategyGrid) -> StrategyGrid {
        let actions = self
            .selection
            .iter()
            .enumerate()
            .map(|(i, s)| parent.actions(i).select_rows(s.iter()))
            .collect();
        StrategyGrid::new(actions).expect("subset of a valid grid")
    }

    /// Maps a sub-grid of `self.to_grid(parent)` back onto the parent grid.
    pub fn restrict(&self, inner: &SubGrid) -> SubGrid {
        SubGrid {
            selection: self
                .selection
                .iter()
                .zip(&inner.selection)
                .map(|(outer, inner)| inner.iter().map(|&k| outer[k]).collect())
                .collect(),
        }
    }

    /// Adds the actions of a parent grid point to the selection.
    pub fn include(&mut self, parent: &StrategyGrid, parent_flat: usize) {
        for (s, k) in self.selection.iter_mut().zip(parent.tuple(parent_flat)) {
            if let Err(pos) = s.binary_search(&k) {
                s.insert(pos, k);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> StrategyGrid {
        StrategyGrid::new(vec![
            DMatrix::from_row_slice(3, 1, &[0.0, 1.0, 2.0]),
            DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 1.0]),
        ])
        .unwrap()
    }

    #[test]
    fn point_layout() {
        let g = grid();
        assert_eq!(g.size(), 6);
        assert_eq!(g.dim(), 3);
        assert_eq!(g.tuple(4), vec![1, 1]);
        assert_eq!(g.point(4), vec![1.0, 1.0, 1.0]);
        assert_eq!(g.flat(&[2, 1]).unwrap(), 5);
        assert!(g.flat(&[3, 0]).is_err());
    }

    #[test]
    fn duplicate_actions_are_rejected() {
        assert!(StrategyGrid::from_scalar_actions(&[vec![0.0, 0.0]]).is_err());
    }

    #[test]
    fn size_limit() {
        let lists = vec![vec![0.0, 1.0, 2.0]; 3];
        let actions = lists
            .iter()
            .map(|l| DMatrix::from_column_slice(3, 1, l))
            .collect();
        assert!(StrategyGrid::with_limit(actions, 26).is_err());
    }

    #[test]
    fn single_point_grid() {
        let g = StrategyGrid::from_scalar_actions(&[vec![0.5], vec![1.5]]).unwrap();
        assert_eq!(g.size(), 1);
        assert_eq!(g.point(0), vec![0.5, 1.5]);
    }

    #[test]
    fn subgrid_indexing() {
        let g = grid();
        let sub = g.subgrid(vec![vec![2, 0], vec![1]]).unwrap();
        assert_eq!(sub.shape(), vec![2, 1]);
        assert_eq!(sub.parent_indices(&g), vec![3, 5]);
        assert_eq!(sub.position_of(&g, 5), Some(1));
        assert_eq!(sub.position_of(&g, 4), None);
        let standalone = sub.to_grid(&g);
        assert_eq!(standalone.point(1), g.point(5));
    }

    #[test]
    fn nearest_point_by_blocks() {
        let g = grid();
        assert_eq!(g.nearest_point(&[1.9, 0.8, 0.9]), g.flat(&[2, 1]).unwrap());
    }
}
