//! Damped semismooth Newton for `−Δ_h u + g(x, u) = −Δ_h v` with optional
//! hard walls on `u`, wrapped in a primal-dual active-set loop.
//!
//! `g` is the drift plus whichever penalty terms are switched on. Hard walls
//! are handled by pinning active nodes to the wall and solving the reduced
//! nonlinear system on the free nodes.

use crate::error::{Error, Result};
use crate::grid::{Grid, Point};
use crate::linalg::BandCholesky;
use crate::noise::Drift;

const LINE_SEARCH_FLOOR: f64 = 1.0 / 1_048_576.0; // 2^-20
const ARMIJO: f64 = 1e-4;

/// A penalty term `±(1/scale)·(u − wall)^∓`.
#[derive(Clone, Copy)]
pub(crate) struct Penalty<'a> {
    pub inv_scale: f64,
    pub wall: &'a [f64],
}

pub(crate) struct System<'a> {
    pub grid: &'a Grid,
    pub points: &'a [Point],
    pub drift: &'a Drift,
    /// `−Δ_h v`
    pub source: &'a [f64],
    /// adds `−(1/δ)(u − h¹)⁻`
    pub lower_penalty: Option<Penalty<'a>>,
    /// adds `+(1/ε)(u − h²)⁺`
    pub upper_penalty: Option<Penalty<'a>>,
}

#[derive(Clone, Copy, Default)]
pub(crate) struct Walls<'a> {
    pub lower: Option<&'a [f64]>,
    pub upper: Option<&'a [f64]>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct EngineOptions {
    pub tol: f64,
    pub max_newton: usize,
    pub max_active_set: usize,
}

pub(crate) struct EngineSolution {
    pub u: Vec<f64>,
    /// `−Δ_h u − source + g(u)`, the multiplier density.
    pub residual: Vec<f64>,
    /// Residual tolerance actually enforced on free nodes (never below the
    /// rounding floor of the operator).
    pub tol: f64,
}

impl System<'_> {
    #[inline]
    fn nodal(&self, i: usize, u: f64) -> (f64, f64) {
        let x = self.points[i].as_slice();
        let mut g = self.drift.value(x, u);
        let mut dg = self.drift.derivative(x, u);
        if let Some(p) = self.lower_penalty {
            let gap = u - p.wall[i];
            if gap < 0.0 {
                g += p.inv_scale * gap;
                dg += p.inv_scale;
            }
        }
        if let Some(p) = self.upper_penalty {
            let gap = u - p.wall[i];
            if gap > 0.0 {
                g += p.inv_scale * gap;
                dg += p.inv_scale;
            }
        }
        (g, dg)
    }

    pub(crate) fn residual_into(&self, u: &[f64], out: &mut [f64]) {
        self.grid.neg_laplacian_into(u, out);
        for i in 0..u.len() {
            out[i] += self.nodal(i, u[i]).0 - self.source[i];
        }
    }

    pub(crate) fn residual(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        self.residual_into(u, &mut out);
        out
    }

    /// Rounding floor for the residual at `u`.
    fn floor(&self, u: &[f64]) -> f64 {
        let usup = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let ssup = self.source.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let gsup = (0..u.len()).fold(0.0f64, |m, i| m.max(self.nodal(i, u[i]).0.abs()));
        64.0 * f64::EPSILON * (2.0 * self.grid.stencil_diagonal() * usup + ssup + gsup)
    }

    /// Newton on the free nodes; pinned nodes are left untouched.
    fn newton(&self, u: &mut [f64], pinned: Option<&[bool]>, opts: &EngineOptions) -> Result<f64> {
        let n = u.len();
        let free = |i: usize| pinned.is_none_or(|p| !p[i]);
        let mut r = vec![0.0; n];
        let mut trial = vec![0.0; n];
        let mut r_trial = vec![0.0; n];
        let free_norm2 = |r: &[f64]| (0..n).filter(|&i| free(i)).map(|i| r[i] * r[i]).sum::<f64>().sqrt();
        let free_sup = |r: &[f64]| (0..n).filter(|&i| free(i)).fold(0.0f64, |m, i| m.max(r[i].abs()));

        self.residual_into(u, &mut r);
        let mut fallbacks = 0;
        for _ in 0..opts.max_newton {
            let tol = opts.tol.max(self.floor(u));
            if free_sup(&r) <= tol {
                return Ok(tol);
            }
            let shift: Vec<f64> = (0..n).map(|i| self.nodal(i, u[i]).1).collect();
            let jac = BandCholesky::laplacian(self.grid, &shift, pinned)?;
            let mut step: Vec<f64> = (0..n).map(|i| if free(i) { -r[i] } else { 0.0 }).collect();
            jac.solve_in_place(&mut step);

            let norm0 = free_norm2(&r);
            let mut t = 1.0;
            loop {
                for i in 0..n {
                    trial[i] = u[i] + t * step[i];
                }
                self.residual_into(&trial, &mut r_trial);
                if free_norm2(&r_trial) <= (1.0 - ARMIJO * t) * norm0 {
                    break;
                }
                t *= 0.5;
                if t < LINE_SEARCH_FLOOR {
                    if free_sup(&r) <= 16.0 * tol {
                        return Ok(16.0 * tol);
                    }
                    // At a kink of the penalty the chosen generalized
                    // Jacobian need not give descent; take the full step.
                    fallbacks += 1;
                    if fallbacks > opts.max_newton / 2 {
                        return Err(Error::NonConvergence {
                            stage: "newton line search",
                            iterations: fallbacks,
                            residual: free_sup(&r),
                        });
                    }
                    for i in 0..n {
                        trial[i] = u[i] + step[i];
                    }
                    self.residual_into(&trial, &mut r_trial);
                    break;
                }
            }
            u.copy_from_slice(&trial);
            std::mem::swap(&mut r, &mut r_trial);
        }
        let tol = opts.tol.max(self.floor(u));
        if free_sup(&r) <= tol {
            return Ok(tol);
        }
        Err(Error::NonConvergence {
            stage: "semismooth newton",
            iterations: opts.max_newton,
            residual: free_sup(&r),
        })
    }

    /// Solves the (possibly wall-constrained) system starting from `u0`.
    pub(crate) fn solve(&self, walls: Walls<'_>, u0: Vec<f64>, opts: &EngineOptions) -> Result<EngineSolution> {
        let mut u = u0;
        if walls.lower.is_none() && walls.upper.is_none() {
            let tol = self.newton(&mut u, None, opts)?;
            let residual = self.residual(&u);
            return Ok(EngineSolution { u, residual, tol });
        }

        let n = u.len();
        let c = self.grid.stencil_diagonal();
        let mut r = self.residual(&u);
        let mut lower_set = vec![false; n];
        let mut upper_set = vec![false; n];
        let mut pinned = vec![false; n];
        let mut tol = opts.tol;
        for it in 0..opts.max_active_set {
            let mut changed = it == 0;
            for i in 0..n {
                let lo = walls.lower.is_some_and(|h| r[i] + c * (h[i] - u[i]) > 0.0);
                let up = walls.upper.is_some_and(|h| r[i] + c * (h[i] - u[i]) < 0.0);
                changed |= lo != lower_set[i] || up != upper_set[i];
                lower_set[i] = lo;
                upper_set[i] = up;
            }
            if !changed {
                return Ok(EngineSolution { u, residual: r, tol });
            }
            for i in 0..n {
                pinned[i] = lower_set[i] || upper_set[i];
                if let (true, Some(h)) = (lower_set[i], walls.lower) {
                    u[i] = h[i];
                }
                if let (true, Some(h)) = (upper_set[i], walls.upper) {
                    u[i] = h[i];
                }
            }
            tol = self.newton(&mut u, Some(&pinned), opts)?;
            r = self.residual(&u);
        }
        Err(Error::NonConvergence {
            stage: "active-set iteration",
            iterations: opts.max_active_set,
            residual: r.iter().fold(0.0, |m, v| m.max(v.abs())),
        })
    }
}
