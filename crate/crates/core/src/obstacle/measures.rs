//! Reflection-measure extraction and the clause-by-clause solution check.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::ScalarField;

use super::{ObstacleProblem, ReflectionMeasures, ResidualReport, SolutionTriplet};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct MeasureDiagnostics {
    /// `Σ |r_i| · cell_volume` over nodes touching neither wall.
    pub off_contact_mass: f64,
    pub lower_contacts: usize,
    pub upper_contacts: usize,
}

/// `r_i = (−Δ_h z)_i + f(x_i, z_i + v_i)`.
fn nodal_residual(problem: &ObstacleProblem<'_>, z: &[f64]) -> Vec<f64> {
    let grid = problem.grid;
    let mut r = grid.neg_laplacian(z);
    for (i, p) in grid.points().enumerate() {
        r[i] += problem.drift.value(p.as_slice(), z[i] + problem.v[i]);
    }
    r
}

/// Splits the residual `r = (η − ξ)/cell_volume` into the two measures:
/// `r⁺` on the lower contact set becomes `η`, `r⁻` on the upper contact set
/// becomes `ξ`. `tol` is a residual density tolerance: a contact node whose
/// residual has the wrong sign by more than `tol` is an error.
pub fn extract_measures(
    problem: &ObstacleProblem<'_>,
    z: &ScalarField,
    tol: f64,
) -> Result<(ReflectionMeasures, MeasureDiagnostics)> {
    problem.validate()?;
    z.same_grid(problem.v)?;
    let cv = problem.grid.cell_volume();
    let contact_tol = problem.walls.contact_tol();
    let (lo, hi) = (problem.walls.lower(), problem.walls.upper());
    let r = nodal_residual(problem, z.values());

    let n = r.len();
    let mut eta = vec![0.0; n];
    let mut xi = vec![0.0; n];
    let mut diag = MeasureDiagnostics::default();
    for i in 0..n {
        let u = z[i] + problem.v[i];
        if u <= lo[i] + contact_tol {
            diag.lower_contacts += 1;
            if r[i] < -tol {
                return Err(Error::WrongSign {
                    wall: "lower",
                    node: i,
                    mass: r[i] * cv,
                });
            }
            eta[i] = r[i].max(0.0) * cv;
        } else if u >= hi[i] - contact_tol {
            diag.upper_contacts += 1;
            if r[i] > tol {
                return Err(Error::WrongSign {
                    wall: "upper",
                    node: i,
                    mass: r[i] * cv,
                });
            }
            xi[i] = (-r[i]).max(0.0) * cv;
        } else {
            diag.off_contact_mass += r[i].abs() * cv;
        }
    }
    Ok((ReflectionMeasures::new(eta, xi)?, diag))
}

pub(crate) fn residual_report(
    problem: &ObstacleProblem<'_>,
    u: &ScalarField,
    z: &ScalarField,
    measures: &ReflectionMeasures,
    off_contact_mass: f64,
) -> ResidualReport {
    let (lo, hi) = (problem.walls.lower(), problem.walls.upper());
    let r = nodal_residual(problem, z.values());
    let cv = problem.grid.cell_volume();
    let (eta, xi) = (measures.eta(), measures.xi());
    let mut rep = ResidualReport {
        off_contact_mass,
        eta_mass: measures.eta_mass(),
        xi_mass: measures.xi_mass(),
        ..Default::default()
    };
    for i in 0..u.len() {
        rep.wall_violation = rep.wall_violation.max(lo[i] - u[i]).max(u[i] - hi[i]);
        rep.lower_complementarity += eta[i] * (u[i] - lo[i]).abs();
        rep.upper_complementarity += xi[i] * (hi[i] - u[i]).abs();
        rep.identity_residual = rep.identity_residual.max((r[i] * cv - (eta[i] - xi[i])).abs());
    }
    rep
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckTolerances {
    /// Allowed wall violation.
    pub wall: f64,
    /// Complementarity sums must be `≤ complementarity · (1 + total mass)`.
    pub complementarity: f64,
    /// Allowed nodal mismatch, in mass units, of `r · cell_volume = η − ξ`.
    pub identity: f64,
}

impl Default for CheckTolerances {
    fn default() -> Self {
        CheckTolerances {
            wall: 1e-9,
            complementarity: 1e-10,
            identity: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClauseResult {
    pub clause: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Worst node, when the clause is nodewise.
    pub node: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub clauses: Vec<ClauseResult>,
    pub pass: bool,
}

impl CheckReport {
    pub fn clause(&self, name: &str) -> Option<&ClauseResult> {
        self.clauses.iter().find(|c| c.clause == name)
    }
}

/// Re-derives every solution clause from `triplet.u` and the measures.
pub fn check_solution(triplet: &SolutionTriplet, problem: &ObstacleProblem<'_>, tol: &CheckTolerances) -> CheckReport {
    let n = problem.grid.len();
    let mut clauses = Vec::new();
    let mut push = |clause, value: f64, tolerance: f64, node| {
        clauses.push(ClauseResult {
            clause,
            value,
            tolerance,
            pass: value <= tolerance,
            node,
        });
    };
    if triplet.u.len() != n || triplet.measures.eta().len() != n || triplet.measures.xi().len() != n {
        push("shape", f64::INFINITY, 0.0, None);
        return CheckReport { clauses, pass: false };
    }

    let u = triplet.u.values();
    let (lo, hi) = (problem.walls.lower(), problem.walls.upper());
    let (eta, xi) = (triplet.measures.eta(), triplet.measures.xi());

    let (mut worst, mut at) = (0.0f64, None);
    for i in 0..n {
        let viol = (lo[i] - u[i]).max(u[i] - hi[i]);
        if viol > worst || (!u[i].is_finite() && at.is_none()) {
            worst = if u[i].is_finite() { viol } else { f64::INFINITY };
            at = Some(i);
        }
    }
    push("band", worst, tol.wall, at);

    let (mut neg, mut at) = (0.0f64, None);
    for i in 0..n {
        let bad = if eta[i].is_finite() && xi[i].is_finite() {
            (-eta[i]).max(-xi[i])
        } else {
            f64::INFINITY
        };
        if bad > neg {
            neg = bad;
            at = Some(i);
        }
    }
    push("nonnegative", neg, 0.0, at);

    let overlaps: Vec<usize> = (0..n).filter(|&i| eta[i] > 0.0 && xi[i] > 0.0).collect();
    push("disjoint", overlaps.len() as f64, 0.0, overlaps.first().copied());

    let z: Vec<f64> = u.iter().zip(problem.v.values()).map(|(a, b)| a - b).collect();
    let r = nodal_residual(problem, &z);
    let cv = problem.grid.cell_volume();
    let (mut worst, mut at) = (0.0f64, None);
    for i in 0..n {
        let d = (r[i] * cv - (eta[i] - xi[i])).abs();
        if d > worst || (d.is_nan() && at.is_none()) {
            worst = if d.is_nan() { f64::INFINITY } else { d };
            at = Some(i);
        }
    }
    push("identity", worst, tol.identity, at);

    let lower: f64 = (0..n).map(|i| eta[i] * (u[i] - lo[i]).abs()).sum();
    let upper: f64 = (0..n).map(|i| xi[i] * (hi[i] - u[i]).abs()).sum();
    push(
        "lower complementarity",
        lower,
        tol.complementarity * (1.0 + triplet.measures.eta_mass()),
        None,
    );
    push(
        "upper complementarity",
        upper,
        tol.complementarity * (1.0 + triplet.measures.xi_mass()),
        None,
    );

    let pass = clauses.iter().all(|c| c.pass);
    CheckReport { clauses, pass }
}
