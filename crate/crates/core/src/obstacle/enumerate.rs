//! Brute-force oracle: try every assignment of nodes to {free, lower
//! contact, upper contact}, solve the linear system on the free nodes, and
//! keep the assignments whose solution is feasible with correctly signed
//! multipliers. Only for affine drift and at most a dozen nodes.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::dense_cholesky_solve;

use super::measures::{extract_measures, residual_report};
use super::{ObstacleProblem, SolutionTriplet};
use crate::grid::ScalarField;

pub const MAX_ENUMERATION_NODES: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Contact {
    Free,
    Lower,
    Upper,
}

#[derive(Debug, Clone)]
pub struct EnumerationOutcome {
    pub triplet: SolutionTriplet,
    pub assignment: Vec<Contact>,
    /// Number of assignments examined, `3^N`.
    pub examined: u64,
}

struct Setup {
    n: usize,
    /// dense `−Δ_h + slope·I`, row-major
    matrix: Vec<f64>,
    rhs: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    u_tol: f64,
    r_tol: f64,
}

fn decode(mut index: u64, n: usize, out: &mut [Contact]) {
    for slot in out.iter_mut().take(n) {
        *slot = match index % 3 {
            0 => Contact::Free,
            1 => Contact::Lower,
            _ => Contact::Upper,
        };
        index /= 3;
    }
}

impl Setup {
    /// Solves for `u` under `assignment`; returns it if feasible.
    fn try_assignment(&self, assignment: &[Contact], a: &mut Vec<f64>, b: &mut Vec<f64>, u: &mut [f64]) -> bool {
        let n = self.n;
        let free: Vec<usize> = (0..n).filter(|&i| assignment[i] == Contact::Free).collect();
        for i in 0..n {
            u[i] = match assignment[i] {
                Contact::Lower => self.lo[i],
                Contact::Upper => self.hi[i],
                Contact::Free => 0.0,
            };
        }
        let m = free.len();
        if m > 0 {
            a.clear();
            b.clear();
            for &i in &free {
                let mut rhs = self.rhs[i];
                for j in 0..n {
                    if assignment[j] != Contact::Free {
                        rhs -= self.matrix[i * n + j] * u[j];
                    }
                }
                b.push(rhs);
                for &j in &free {
                    a.push(self.matrix[i * n + j]);
                }
            }
            if !dense_cholesky_solve(a, m, b) {
                return false;
            }
            for (k, &i) in free.iter().enumerate() {
                u[i] = b[k];
                if u[i] < self.lo[i] - self.u_tol || u[i] > self.hi[i] + self.u_tol {
                    return false;
                }
            }
        }
        for i in 0..n {
            if assignment[i] == Contact::Free {
                continue;
            }
            let r: f64 = (0..n).map(|j| self.matrix[i * n + j] * u[j]).sum::<f64>() - self.rhs[i];
            let ok = match assignment[i] {
                Contact::Lower => r >= -self.r_tol,
                _ => r <= self.r_tol,
            };
            if !ok {
                return false;
            }
        }
        true
    }
}

pub fn solve_active_set_enum(problem: &ObstacleProblem<'_>) -> Result<EnumerationOutcome> {
    problem.validate()?;
    let grid = problem.grid;
    let n = grid.len();
    if n > MAX_ENUMERATION_NODES {
        return Err(Error::param(
            "grid",
            format!("{n} nodes exceed the enumeration limit of {MAX_ENUMERATION_NODES}"),
        ));
    }
    let (offset, slope) = problem
        .drift
        .as_affine()
        .ok_or_else(|| Error::param("drift", "enumeration requires an affine drift"))?;
    if slope < 0.0 {
        return Err(Error::param("drift", "slope must be nonnegative"));
    }

    let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    let mut matrix = vec![0.0; n * n];
    for i in 0..n {
        matrix[i * n + i] = grid.stencil_diagonal() + slope;
        for j in grid.neighbors(i) {
            matrix[i * n + j] = -inv_h2;
        }
    }
    let source = problem.source();
    let rhs: Vec<f64> = grid
        .points()
        .enumerate()
        .map(|(i, p)| source[i] - offset(p.as_slice()))
        .collect();
    let lo = problem.walls.lower().values().to_vec();
    let hi = problem.walls.upper().values().to_vec();
    let hsup = problem.walls.lower().sup_norm().max(problem.walls.upper().sup_norm());
    let rsup = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let setup = Setup {
        n,
        u_tol: 1e-11 * (1.0 + hsup),
        r_tol: 1e-11 * (rsup + (grid.stencil_diagonal() + slope) * (1.0 + hsup)),
        matrix,
        rhs,
        lo,
        hi,
    };

    let total = 3u64.pow(n as u32);
    let feasible: Vec<u64> = (0..total)
        .into_par_iter()
        .map_init(
            || (vec![Contact::Free; n], Vec::new(), Vec::new(), vec![0.0; n]),
            |(assign, a, b, u), index| {
                decode(index, n, assign);
                setup.try_assignment(assign, a, b, u).then_some(index)
            },
        )
        .flatten()
        .collect();
    if feasible.len() != 1 {
        return Err(Error::Enumeration(feasible.len()));
    }

    let mut assignment = vec![Contact::Free; n];
    decode(feasible[0], n, &mut assignment);
    let mut u = vec![0.0; n];
    setup.try_assignment(&assignment, &mut Vec::new(), &mut Vec::new(), &mut u);

    let z = ScalarField::new(*grid, u.iter().zip(problem.v.values()).map(|(a, b)| a - b).collect())?;
    let (measures, diag) = extract_measures(problem, &z, setup.r_tol.max(1e-9))?;
    let u = ScalarField::new(*grid, u)?;
    let report = residual_report(problem, &u, &z, &measures, diag.off_contact_mass);
    Ok(EnumerationOutcome {
        triplet: SolutionTriplet { u, z, measures, report },
        assignment,
        examined: total,
    })
}
