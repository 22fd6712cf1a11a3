//! Banded Cholesky for the (shifted, partially pinned) discrete Laplacian and
//! a small dense Cholesky used by the enumeration oracle.

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Symmetric positive definite band matrix, lower band stored row-wise:
/// entry `(i, j)` with `i - bw <= j <= i` lives at `i * (bw + 1) + (bw - (i - j))`.
#[derive(Debug, Clone)]
pub(crate) struct BandCholesky {
    size: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandCholesky {
    fn zeros(size: usize, bw: usize) -> Self {
        BandCholesky {
            size,
            bw,
            data: vec![0.0; size * (bw + 1)],
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        i * (self.bw + 1) + self.bw - (i - j)
    }

    /// Assembles `−Δ_h + diag(shift)`, with rows and columns of `pinned`
    /// nodes replaced by the identity, then factors it.
    pub(crate) fn laplacian(grid: &Grid, shift: &[f64], pinned: Option<&[bool]>) -> Result<Self> {
        let size = grid.len();
        let bw = if grid.dim() == 1 { 1 } else { grid.n() };
        let mut m = BandCholesky::zeros(size, bw);
        let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
        let diag = grid.stencil_diagonal();
        let is_pinned = |i: usize| pinned.is_some_and(|p| p[i]);
        for i in 0..size {
            let d = m.at(i, i);
            if is_pinned(i) {
                m.data[d] = 1.0;
                continue;
            }
            m.data[d] = diag + shift[i];
            for k in grid.neighbors(i) {
                if k < i && !is_pinned(k) {
                    let idx = m.at(i, k);
                    m.data[idx] = -inv_h2;
                }
            }
        }
        m.factor()?;
        Ok(m)
    }

    fn factor(&mut self) -> Result<()> {
        let (n, bw) = (self.size, self.bw);
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let mut s = self.data[self.at(i, j)];
                let k0 = j0.max(j.saturating_sub(bw));
                for k in k0..j {
                    s -= self.data[self.at(i, k)] * self.data[self.at(j, k)];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(Error::Internal(format!(
                            "band matrix not positive definite at row {i}"
                        )));
                    }
                    let idx = self.at(i, i);
                    self.data[idx] = s.sqrt();
                } else {
                    let idx = self.at(i, j);
                    self.data[idx] = s / self.data[self.at(j, j)];
                }
            }
        }
        Ok(())
    }

    pub(crate) fn solve_in_place(&self, b: &mut [f64]) {
        let (n, bw) = (self.size, self.bw);
        for i in 0..n {
            let mut s = b[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.data[self.at(i, k)] * b[k];
            }
            b[i] = s / self.data[self.at(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..(i + bw + 1).min(n) {
                s -= self.data[self.at(k, i)] * b[k];
            }
            b[i] = s / self.data[self.at(i, i)];
        }
    }
}

/// Solves the dense SPD system `a x = b` in place (`a` is row-major `m × m`
/// and is overwritten by its Cholesky factor). Returns false if `a` is not
/// numerically positive definite.
pub(crate) fn dense_cholesky_solve(a: &mut [f64], m: usize, b: &mut [f64]) -> bool {
    for j in 0..m {
        let mut d = a[j * m + j];
        for k in 0..j {
            d -= a[j * m + k] * a[j * m + k];
        }
        if d <= 0.0 {
            return false;
        }
        let d = d.sqrt();
        a[j * m + j] = d;
        for i in (j + 1)..m {
            let mut s = a[i * m + j];
            for k in 0..j {
                s -= a[i * m + k] * a[j * m + k];
            }
            a[i * m + j] = s / d;
        }
    }
    for i in 0..m {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i * m + k] * b[k];
        }
        b[i] = s / a[i * m + i];
    }
    for i in (0..m).rev() {
        let mut s = b[i];
        for k in (i + 1)..m {
            s -= a[k * m + i] * b[k];
        }
        b[i] = s / a[i * m + i];
    }
    true
}
