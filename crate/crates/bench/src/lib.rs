//! Shared fixtures for the benchmarks.

use twowall::obstacle::WallPair;
use twowall::{Drift, Grid, ScalarField};

/// The closed-form benchmark on `n` interior nodes: `v = 4x(1 − x)`,
/// walls at ±1/2, zero drift.
pub fn benchmark_problem(n: usize) -> (Grid, Drift, ScalarField, WallPair) {
    let grid = Grid::new(1, n).expect("valid grid");
    let v = ScalarField::from_fn(grid, |x| 4.0 * x[0] * (1.0 - x[0])).expect("finite field");
    let walls = WallPair::constant(&grid, -0.5, 0.5).expect("valid walls");
    (grid, Drift::Zero, v, walls)
}
