//! Uniform interior grids on the unit interval and unit square, nodal fields,
//! and the five-point (three-point in 1D) negative Dirichlet Laplacian.
//!
//! Nodes are numbered with the first coordinate running fastest, so in 2D the
//! node `(i, j)` has flat index `i + n * j` and coordinates
//! `((i + 1) h, (j + 1) h)`. Boundary values are never stored: they are zero.

use crate::error::{Error, Result};

/// Uniform mesh of interior nodes on `(0,1)^k`, `k ∈ {1, 2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    n: usize,
    spacing: f64,
    cell_volume: f64,
}

/// Coordinates of a grid node; `as_slice` has length equal to the grid dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    coords: [f64; 2],
    dim: usize,
}

impl Point {
    pub fn new(coords: &[f64]) -> Self {
        let mut c = [0.0; 2];
        c[..coords.len()].copy_from_slice(coords);
        Point {
            coords: c,
            dim: coords.len(),
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords[..self.dim]
    }

    pub fn distance(&self, other: &Point) -> f64 {
        self.as_slice()
            .iter()
            .zip(other.as_slice())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl Grid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in {{1, 2}}")));
        }
        if n < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 interior nodes per axis, got {n}"
            )));
        }
        let spacing = 1.0 / (n + 1) as f64;
        Ok(Grid {
            dim,
            n,
            spacing,
            cell_volume: spacing.powi(dim as i32),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Interior nodes per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    /// Total number of interior nodes, `n^k`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Diameter of the domain: 1 for the interval, √2 for the square.
    pub fn diameter(&self) -> f64 {
        (self.dim as f64).sqrt()
    }

    pub fn point(&self, index: usize) -> Point {
        let h = self.spacing;
        match self.dim {
            1 => Point::new(&[(index + 1) as f64 * h]),
            _ => {
                let i = index % self.n;
                let j = index / self.n;
                Point::new(&[(i + 1) as f64 * h, (j + 1) as f64 * h])
            }
        }
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }

    /// Diagonal entry of the negative discrete Laplacian.
    pub fn stencil_diagonal(&self) -> f64 {
        2.0 * self.dim as f64 / (self.spacing * self.spacing)
    }

    /// Off-diagonal neighbours of `index` (boundary neighbours are omitted).
    pub(crate) fn neighbors(&self, index: usize) -> impl Iterator<Item = usize> {
        let n = self.n;
        let (i, j) = (index % n, index / n);
        let two_d = self.dim == 2;
        let mut out = [usize::MAX; 4];
        if i > 0 {
            out[0] = index - 1;
        }
        if i + 1 < n {
            out[1] = index + 1;
        }
        if two_d && j > 0 {
            out[2] = index - n;
        }
        if two_d && j + 1 < n {
            out[3] = index + n;
        }
        out.into_iter().filter(|&k| k != usize::MAX)
    }

    /// Writes `−Δ_h values` into `out`.
    pub(crate) fn neg_laplacian_into(&self, values: &[f64], out: &mut [f64]) {
        let inv_h2 = 1.0 / (self.spacing * self.spacing);
        let diag = 2.0 * self.dim as f64;
        let n = self.n;
        match self.dim {
            1 => {
                for i in 0..n {
                    let left = if i > 0 { values[i - 1] } else { 0.0 };
                    let right = if i + 1 < n { values[i + 1] } else { 0.0 };
                    out[i] = (diag * values[i] - left - right) * inv_h2;
                }
            }
            _ => {
                for idx in 0..self.len() {
                    let s: f64 = self.neighbors(idx).map(|k| values[k]).sum();
                    out[idx] = (diag * values[idx] - s) * inv_h2;
                }
            }
        }
    }

    pub(crate) fn neg_laplacian(&self, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; values.len()];
        self.neg_laplacian_into(values, &mut out);
        out
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::GridMismatch {
                expected: self.len(),
                found: len,
            });
        }
        Ok(())
    }
}

/// Real values on the interior nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        ScalarField {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: Grid, value: f64) -> Result<Self> {
        Self::new(grid, vec![value; grid.len()])
    }

    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        grid.check_len(values.len())?;
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node });
        }
        Ok(ScalarField { grid, values })
    }

    /// Samples `f` at every interior node.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = grid.points().map(|p| f(p.as_slice())).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sup_distance(&self, other: &ScalarField) -> Result<f64> {
        self.same_grid(other)?;
        Ok(sup_distance(&self.values, &other.values))
    }

    /// Piecewise-linear (bilinear in 2D) reconstruction at `x ∈ [0,1]^k`,
    /// using the zero boundary values.
    pub fn interpolate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.grid.dim {
            return Err(Error::InvalidGrid(format!(
                "point has {} coordinates, grid has dimension {}",
                x.len(),
                self.grid.dim
            )));
        }
        if let Some(&bad) = x.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(Error::Domain { value: bad });
        }
        let n = self.grid.n;
        let h = self.grid.spacing;
        // padded index k in 0..=n+1, nodal value 0 at k = 0 and k = n + 1
        let cell = |c: f64| {
            let k = ((c / h).floor() as usize).min(n);
            (k, c / h - k as f64)
        };
        let at = |ks: &[usize]| -> f64 {
            if ks.iter().any(|&k| k == 0 || k == n + 1) {
                return 0.0;
            }
            match ks {
                [i] => self.values[i - 1],
                [i, j] => self.values[(i - 1) + n * (j - 1)],
                _ => unreachable!(),
            }
        };
        Ok(match x {
            [a] => {
                let (i, t) = cell(*a);
                (1.0 - t) * at(&[i]) + t * at(&[i + 1])
            }
            [a, b] => {
                let (i, s) = cell(*a);
                let (j, t) = cell(*b);
                (1.0 - s) * (1.0 - t) * at(&[i, j])
                    + s * (1.0 - t) * at(&[i + 1, j])
                    + (1.0 - s) * t * at(&[i, j + 1])
                    + s * t * at(&[i + 1, j + 1])
            }
            _ => unreachable!(),
        })
    }

    pub(crate) fn same_grid(&self, other: &ScalarField) -> Result<()> {
        self.grid.check_len(other.len())?;
        if self.grid != other.grid {
            return Err(Error::GridMismatch {
                expected: self.grid.len(),
                found: other.grid.len(),
            });
        }
        Ok(())
    }
}

impl std::ops::Index<usize> for ScalarField {
    type Output = f64;

    fn index(&self, index: usize) -> &f64 {
        &self.values[index]
    }
}

pub(crate) fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Applies the negative discrete Laplacian `−Δ_h` with zero Dirichlet data.
pub fn laplacian_apply(grid: &Grid, field: &ScalarField) -> Result<ScalarField> {
    grid.check_len(field.len())?;
    if field.grid() != grid {
        return Err(Error::GridMismatch {
            expected: grid.len(),
            found: field.len(),
        });
    }
    ScalarField::new(*grid, grid.neg_laplacian(field.values()))
}
