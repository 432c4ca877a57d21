//! Finite games on factorial grids and the continuous fixed-point baseline.

mod fixed_point;
mod grid;
mod io;
mod nash;

pub use fixed_point::{
    check_equilibrium, fixed_point_solve, EquilibriumCheck, FixedPointConfig, FixedPointResult,
};
pub use grid::{StrategyGrid, SubGrid, DEFAULT_MAX_GRID_SIZE};
pub use io::{read_tensor_csv, write_tensor_csv};
pub use nash::{best_response, nash_extract, NashOutcome, PayoffTensor};
pub(crate) use nash::NashScratch;
