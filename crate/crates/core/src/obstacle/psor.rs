//! Projected successive over-relaxation on the bilateral complementarity
//! system. A nonlinear drift is linearised around the previous outer iterate
//! and the resulting linear problem is swept to convergence.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Point, ScalarField};

use super::measures::{extract_measures, residual_report};
use super::{ObstacleProblem, SolutionTriplet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsorOptions {
    pub omega: f64,
    /// Bound on the sup change of `u` over one sweep.
    pub tol: f64,
    /// Bound on the complementarity residual, in mass units.
    pub tol_mass: f64,
    pub max_sweeps: usize,
    pub max_outer: usize,
}

impl PsorOptions {
    pub fn new(problem: &ObstacleProblem<'_>, tol: f64, omega: f64) -> Self {
        PsorOptions {
            omega,
            tol,
            tol_mass: tol * problem.grid.stencil_diagonal(),
            max_sweeps: 5_000_000,
            max_outer: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PsorStats {
    pub sweeps: usize,
    pub outer_iterations: usize,
    /// Largest wall violation seen over all iterates.
    pub max_band_violation: f64,
    pub final_change: f64,
    pub complementarity: f64,
}

pub fn solve_psor(problem: &ObstacleProblem<'_>, tol: f64, omega: f64) -> Result<SolutionTriplet> {
    solve_psor_with(problem, &PsorOptions::new(problem, tol, omega), None).map(|(t, _)| t)
}

/// `initial` is a starting `z`; the default is `clip(0, h¹ − v, h² − v)`.
pub fn solve_psor_with(
    problem: &ObstacleProblem<'_>,
    opts: &PsorOptions,
    initial: Option<&ScalarField>,
) -> Result<(SolutionTriplet, PsorStats)> {
    problem.validate()?;
    if !(opts.omega > 0.0 && opts.omega < 2.0) {
        return Err(Error::param("omega", format!("{} not in (0, 2)", opts.omega)));
    }
    if !(opts.tol > 0.0 && opts.tol_mass > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    let grid = problem.grid;
    let n = grid.len();
    let points: Vec<Point> = grid.points().collect();
    let source = problem.source();
    let (lo, hi) = (problem.walls.lower().values(), problem.walls.upper().values());
    let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    let diag = grid.stencil_diagonal();
    let cv = grid.cell_volume();
    let affine = problem.drift.as_affine().is_some();

    let mut u: Vec<f64> = match initial {
        Some(z0) => z0
            .values()
            .iter()
            .zip(problem.v.values())
            .enumerate()
            .map(|(i, (z, v))| (z + v).clamp(lo[i], hi[i]))
            .collect(),
        None => problem.clipped_start(),
    };
    let mut stats = PsorStats::default();
    let mut slope = vec![0.0; n];
    let mut offset = vec![0.0; n];
    let mut r = vec![0.0; n];

    // Complementarity residual of the current linearisation, in mass units.
    let complementarity = |u: &[f64], slope: &[f64], offset: &[f64], r: &mut [f64]| -> f64 {
        grid.neg_laplacian_into(u, r);
        let mut total = 0.0;
        for i in 0..n {
            r[i] += slope[i] * u[i] + offset[i] - source[i];
            let allowed = if u[i] <= lo[i] {
                r[i].max(0.0)
            } else if u[i] >= hi[i] {
                r[i].min(0.0)
            } else {
                0.0
            };
            total += (r[i] - allowed).abs() * cv;
        }
        total
    };

    let mut converged = false;
    for outer in 0..opts.max_outer {
        stats.outer_iterations = outer + 1;
        let previous = u.clone();
        for i in 0..n {
            let x = points[i].as_slice();
            slope[i] = problem.drift.derivative(x, u[i]);
            offset[i] = problem.drift.value(x, u[i]) - slope[i] * u[i];
        }
        let mut inner_done = false;
        while stats.sweeps < opts.max_sweeps {
            stats.sweeps += 1;
            let mut change = 0.0f64;
            for i in 0..n {
                let nb: f64 = if grid.dim() == 1 {
                    let l = if i > 0 { u[i - 1] } else { 0.0 };
                    let r = if i + 1 < n { u[i + 1] } else { 0.0 };
                    l + r
                } else {
                    grid.neighbors(i).map(|k| u[k]).sum()
                };
                let gs = (source[i] - offset[i] + nb * inv_h2) / (diag + slope[i]);
                let next = (u[i] + opts.omega * (gs - u[i])).clamp(lo[i], hi[i]);
                change = change.max((next - u[i]).abs());
                u[i] = next;
            }
            for i in 0..n {
                stats.max_band_violation = stats.max_band_violation.max(lo[i] - u[i]).max(u[i] - hi[i]);
            }
            stats.final_change = change;
            if change <= 0.1 * opts.tol {
                stats.complementarity = complementarity(&u, &slope, &offset, &mut r);
                if stats.complementarity <= opts.tol_mass {
                    inner_done = true;
                    break;
                }
            }
        }
        if !inner_done {
            break;
        }
        let outer_change = u.iter().zip(&previous).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if affine || outer_change <= 0.1 * opts.tol {
            // re-linearise once more to measure the true nonlinear residual
            for i in 0..n {
                let x = points[i].as_slice();
                slope[i] = problem.drift.derivative(x, u[i]);
                offset[i] = problem.drift.value(x, u[i]) - slope[i] * u[i];
            }
            stats.complementarity = complementarity(&u, &slope, &offset, &mut r);
            if stats.complementarity <= opts.tol_mass {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            stage: "psor",
            iterations: stats.sweeps,
            residual: stats.complementarity.max(stats.final_change),
        });
    }

    let z = ScalarField::new(*grid, u.iter().zip(problem.v.values()).map(|(a, b)| a - b).collect())?;
    let (measures, diag_m) = extract_measures(problem, &z, opts.tol_mass)?;
    let u = ScalarField::new(*grid, u)?;
    let report = residual_report(problem, &u, &z, &measures, diag_m.off_contact_mass);
    Ok((SolutionTriplet { u, z, measures, report }, stats))
}
