use crate::error::{Error, Result};
use crate::grid::{Grid, Point, ScalarField};
use crate::noise::Drift;

use super::engine::{EngineOptions, Penalty, System, Walls};
use super::measures::{extract_measures, residual_report};
use super::{ObstacleProblem, PenaltyParams, SolutionTriplet};

fn engine_options(grid: &Grid, tol: f64) -> Result<EngineOptions> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::param("tol", "must be positive"));
    }
    Ok(EngineOptions {
        tol,
        max_newton: 100,
        max_active_set: 4 * grid.len() + 100,
    })
}

fn field_minus(grid: &Grid, u: &[f64], v: &[f64]) -> Result<ScalarField> {
    ScalarField::new(*grid, u.iter().zip(v).map(|(a, b)| a - b).collect())
}

/// Solves the doubly penalized equation
/// `−Δz + f(z + v) = (1/δ)(z + v − h¹)⁻ − (1/ε)(z + v − h²)⁺`
/// with `ε = params.epsilon`, `δ = params.delta`, and returns `z`.
pub fn solve_penalized(problem: &ObstacleProblem<'_>, params: &PenaltyParams, tol: f64) -> Result<ScalarField> {
    problem.validate()?;
    params.validate()?;
    let opts = engine_options(problem.grid, tol)?;
    let points: Vec<Point> = problem.grid.points().collect();
    let source = problem.source();
    let sys = System {
        grid: problem.grid,
        points: &points,
        drift: problem.drift,
        source: &source,
        lower_penalty: Some(Penalty {
            inv_scale: 1.0 / params.delta,
            wall: problem.walls.lower().values(),
        }),
        upper_penalty: Some(Penalty {
            inv_scale: 1.0 / params.epsilon,
            wall: problem.walls.upper().values(),
        }),
    };
    let sol = sys.solve(Walls::default(), problem.clipped_start(), &opts)?;
    field_minus(problem.grid, &sol.u, problem.v.values())
}

/// Solution of a single lower-wall problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleWallSolution {
    pub z: ScalarField,
    pub u: ScalarField,
    /// Node masses of the reflection measure at the lower wall.
    pub eta: Vec<f64>,
}

/// Solves the lower-wall problem `(0; f + (· + v − h²)⁺/ε; h¹)`: find `z`
/// with `z + v ≥ h¹` and a nonnegative `η` supported on the contact set.
/// Without `upper_penalty` this is the plain problem `(0; f; h¹)`. The wall
/// is not required to satisfy any boundary compatibility.
pub fn solve_single_wall(
    grid: &Grid,
    drift: &Drift,
    v: &ScalarField,
    lower: &ScalarField,
    upper_penalty: Option<(f64, &ScalarField)>,
    tol: f64,
) -> Result<SingleWallSolution> {
    for f in [v, lower] {
        if f.grid() != grid {
            return Err(Error::GridMismatch {
                expected: grid.len(),
                found: f.len(),
            });
        }
    }
    if let Some((eps, h2)) = upper_penalty {
        if !(eps > 0.0) {
            return Err(Error::param("epsilon", "must be positive"));
        }
        if h2.grid() != grid {
            return Err(Error::GridMismatch {
                expected: grid.len(),
                found: h2.len(),
            });
        }
    }
    let points: Vec<Point> = grid.points().collect();
    let source = grid.neg_laplacian(v.values());
    let u0: Vec<f64> = v.values().iter().zip(lower.values()).map(|(a, b)| a.max(*b)).collect();
    single_wall_core(grid, &points, drift, &source, v, lower, upper_penalty, u0, tol)
}

#[allow(clippy::too_many_arguments)]
fn single_wall_core(
    grid: &Grid,
    points: &[Point],
    drift: &Drift,
    source: &[f64],
    v: &ScalarField,
    lower: &ScalarField,
    upper_penalty: Option<(f64, &ScalarField)>,
    u0: Vec<f64>,
    tol: f64,
) -> Result<SingleWallSolution> {
    let opts = engine_options(grid, tol)?;
    let sys = System {
        grid,
        points,
        drift,
        source,
        lower_penalty: None,
        upper_penalty: upper_penalty.map(|(eps, h2)| Penalty {
            inv_scale: 1.0 / eps,
            wall: h2.values(),
        }),
    };
    let walls = Walls {
        lower: Some(lower.values()),
        upper: None,
    };
    let sol = sys.solve(walls, u0, &opts)?;

    let cv = grid.cell_volume();
    let contact_tol = 1e-7 * (1.0 + lower.sup_norm());
    let mut eta = vec![0.0; sol.u.len()];
    for i in 0..eta.len() {
        if sol.u[i] <= lower[i] + contact_tol {
            if sol.residual[i] < -sol.tol {
                return Err(Error::WrongSign {
                    wall: "lower",
                    node: i,
                    mass: sol.residual[i] * cv,
                });
            }
            eta[i] = sol.residual[i].max(0.0) * cv;
        }
    }
    Ok(SingleWallSolution {
        z: field_minus(grid, &sol.u, v.values())?,
        u: ScalarField::new(*grid, sol.u)?,
        eta,
    })
}

/// Result of the staged two-wall construction.
#[derive(Debug, Clone)]
pub struct TwoWallStages {
    pub triplet: SolutionTriplet,
    /// `z^{ε_m}` for each stage of the schedule, in order of decreasing `ε`.
    pub stages: Vec<ScalarField>,
    pub epsilons: Vec<f64>,
}

/// Solves the two-wall problem with the default starting point.
pub fn solve_two_wall(problem: &ObstacleProblem<'_>, params: &PenaltyParams, tol: f64) -> Result<SolutionTriplet> {
    solve_two_wall_from(problem, params, tol, None).map(|s| s.triplet)
}

/// Staged construction: for each `ε_m` solve the lower-wall problem with
/// the upper wall penalized at `1/ε_m`, warm-starting from the previous
/// stage; then pass to `ε → 0` by enforcing the upper wall exactly, and
/// extract `η`, `ξ` from the residual.
///
/// `initial` is a starting `z`; the default is `clip(0, h¹ − v, h² − v)`.
pub fn solve_two_wall_from(
    problem: &ObstacleProblem<'_>,
    params: &PenaltyParams,
    tol: f64,
    initial: Option<&ScalarField>,
) -> Result<TwoWallStages> {
    problem.validate()?;
    params.validate()?;
    let grid = problem.grid;
    let opts = engine_options(grid, tol)?;
    let points: Vec<Point> = grid.points().collect();
    let source = problem.source();
    let (lower, upper) = (problem.walls.lower(), problem.walls.upper());

    let mut u = match initial {
        Some(z0) => {
            if z0.grid() != grid {
                return Err(Error::GridMismatch {
                    expected: grid.len(),
                    found: z0.len(),
                });
            }
            z0.values().iter().zip(problem.v.values()).map(|(z, v)| z + v).collect()
        }
        None => problem.clipped_start(),
    };

    let mut stages = Vec::with_capacity(params.stages);
    let mut epsilons = Vec::with_capacity(params.stages);
    for m in 0..params.stages {
        let eps = params.epsilon_at(m);
        let stage = single_wall_core(
            grid,
            &points,
            problem.drift,
            &source,
            problem.v,
            lower,
            Some((eps, upper)),
            u,
            tol,
        )?;
        u = stage.u.into_values();
        stages.push(stage.z);
        epsilons.push(eps);
    }

    let sys = System {
        grid,
        points: &points,
        drift: problem.drift,
        source: &source,
        lower_penalty: None,
        upper_penalty: None,
    };
    let walls = Walls {
        lower: Some(lower.values()),
        upper: Some(upper.values()),
    };
    let sol = sys.solve(walls, u, &opts)?;
    let z = field_minus(grid, &sol.u, problem.v.values())?;
    let (measures, diag) = extract_measures(problem, &z, sol.tol)?;
    let u = ScalarField::new(*grid, sol.u)?;
    let report = residual_report(problem, &u, &z, &measures, diag.off_contact_mass);
    Ok(TwoWallStages {
        triplet: SolutionTriplet { u, z, measures, report },
        stages,
        epsilons,
    })
}
