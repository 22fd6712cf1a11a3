//! Green function of the Dirichlet Laplacian: the closed form on the unit
//! interval, the discrete kernel obtained by inverting `−Δ_h`, and the two
//! kernel constants that enter the contraction condition.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::BandCholesky;

/// Default node cap for dense kernels on the unit square (64 × 64).
pub const DEFAULT_KERNEL_CAP: usize = 64 * 64;

/// Dense discrete Green kernel. `get(i, j)` couples node `i` to source node `j`
/// and is normalised so that `Σ_j g[i][j] φ_j · cell_volume` approximates
/// `∫ G(x_i, y) φ(y) dy`.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenKernel {
    grid: Grid,
    values: Vec<f64>,
}

impl GreenKernel {
    pub fn zeros(grid: Grid) -> Self {
        GreenKernel {
            grid,
            values: vec![0.0; grid.len() * grid.len()],
        }
    }

    /// Nodal samples of the closed-form 1D kernel.
    pub fn analytic_1d(grid: Grid) -> Result<Self> {
        if grid.dim() != 1 {
            return Err(Error::InvalidGrid("closed-form kernel exists only for k = 1".into()));
        }
        let n = grid.len();
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            let x = grid.point(i).as_slice()[0];
            for j in 0..n {
                values.push(green_1d_analytic(x, grid.point(j).as_slice()[0])?);
            }
        }
        Ok(GreenKernel { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.grid.len();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn check_grid(&self, grid: &Grid) -> Result<()> {
        if &self.grid != grid {
            return Err(Error::GridMismatch {
                expected: grid.len(),
                found: self.grid.len(),
            });
        }
        Ok(())
    }
}

/// `G(x, y) = min(x, y) − x y` on `[0, 1]²`.
pub fn green_1d_analytic(x: f64, y: f64) -> Result<f64> {
    for v in [x, y] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Domain { value: v });
        }
    }
    Ok(x.min(y) - x * y)
}

pub fn discrete_green(grid: &Grid) -> Result<GreenKernel> {
    discrete_green_with_cap(grid, DEFAULT_KERNEL_CAP)
}

/// Solves `−Δ_h g_j = e_j / cell_volume` for every source node `j`.
pub fn discrete_green_with_cap(grid: &Grid, cap: usize) -> Result<GreenKernel> {
    let n = grid.len();
    if grid.dim() == 2 && n > cap {
        return Err(Error::KernelCap { nodes: n, cap });
    }
    let factor = BandCholesky::laplacian(grid, &vec![0.0; n], None)?;
    let scale = 1.0 / grid.cell_volume();
    let columns: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut col = vec![0.0; n];
            col[j] = scale;
            factor.solve_in_place(&mut col);
            col
        })
        .collect();
    let mut values = vec![0.0; n * n];
    for (j, col) in columns.iter().enumerate() {
        for (i, g) in col.iter().enumerate() {
            values[i * n + j] = *g;
        }
    }
    Ok(GreenKernel { grid: *grid, values })
}

/// `C_D ≈ max_i Σ_j g[i][j]² · cell_volume`.
pub fn green_sup_l2(grid: &Grid, kernel: &GreenKernel) -> Result<f64> {
    kernel.check_grid(grid)?;
    let cv = grid.cell_volume();
    Ok((0..grid.len())
        .map(|i| kernel.row(i).iter().map(|g| g * g).sum::<f64>() * cv)
        .fold(0.0, f64::max))
}

/// Admissible Hölder exponents for the kernel increment bound.
pub(crate) fn check_lambda(dim: usize, lambda: f64) -> Result<()> {
    let ok = match dim {
        1 => lambda > 0.0 && lambda <= 1.0,
        2 => lambda > 0.0 && lambda < 1.0,
        3 => lambda > 0.0 && lambda < 0.5,
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::param(
            "lambda",
            format!("{lambda} outside the admissible range for k = {dim}"),
        ))
    }
}

/// Empirical Hölder constant
/// `B̂ = max_{x≠y} Σ_z (g[x][z] − g[y][z])² cell_volume / |x − y|^{2λ}`.
///
/// This is a lower bound for any constant that satisfies the bound on all of
/// `D × D`; it is reported as the best available estimate.
pub fn green_holder_constant(grid: &Grid, kernel: &GreenKernel, lambda: f64) -> Result<f64> {
    kernel.check_grid(grid)?;
    check_lambda(grid.dim(), lambda)?;
    let n = grid.len();
    let cv = grid.cell_volume();
    let best = (0..n)
        .into_par_iter()
        .map(|a| {
            let pa = grid.point(a);
            let ra = kernel.row(a);
            let mut best = 0.0f64;
            for b in (a + 1)..n {
                let rb = kernel.row(b);
                let s: f64 = ra.iter().zip(rb).map(|(x, y)| (x - y) * (x - y)).sum();
                let d = pa.distance(&grid.point(b));
                best = best.max(s * cv / d.powf(2.0 * lambda));
            }
            best
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}
