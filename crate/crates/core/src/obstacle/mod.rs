//! The deterministic problem with two reflecting walls: given `v`, find `z`
//! and nonnegative measures `η`, `ξ` with
//!
//! ```text
//! −Δz + f(z + v) = η − ξ,   h¹ ≤ z + v ≤ h²,   z = 0 on ∂D,
//! ∫(z + v − h¹) dη = ∫(h² − z − v) dξ = 0.
//! ```
//!
//! [`solve_two_wall`] follows the penalization construction: a decreasing
//! schedule of upper penalties `ε_m`, each stage an exact single-lower-wall
//! problem, and finally the `ε → 0` limit. [`solve_psor`] and
//! [`solve_active_set_enum`] are independent oracles for the same discrete
//! problem.

mod engine;
mod enumerate;
mod measures;
mod psor;
mod solve;

pub use enumerate::{solve_active_set_enum, Contact, EnumerationOutcome, MAX_ENUMERATION_NODES};
pub use measures::{check_solution, extract_measures, CheckReport, CheckTolerances, ClauseResult, MeasureDiagnostics};
pub use psor::{solve_psor, solve_psor_with, PsorOptions, PsorStats};
pub use solve::{
    solve_penalized, solve_single_wall, solve_two_wall, solve_two_wall_from, SingleWallSolution,
    TwoWallStages,
};

use crate::error::{Error, Result};
use crate::grid::{Grid, Point, ScalarField};
use crate::noise::Drift;

/// Lower and upper walls `h¹ < h²` sampled at the interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct WallPair {
    lower: ScalarField,
    upper: ScalarField,
}

impl WallPair {
    /// Validates strict separation at every node, rejecting pairs closer than
    /// ten contact tolerances.
    pub fn new(lower: ScalarField, upper: ScalarField) -> Result<Self> {
        lower.same_grid(&upper)?;
        let walls = WallPair { lower, upper };
        let min_gap = 10.0 * walls.contact_tol();
        for i in 0..walls.lower.len() {
            let (lo, hi) = (walls.lower[i], walls.upper[i]);
            if lo >= hi {
                return Err(Error::Walls(format!(
                    "wall ordering violated at node {i}: lower {lo} >= upper {hi}"
                )));
            }
            if hi - lo < min_gap {
                return Err(Error::Walls(format!(
                    "walls nearly touch at node {i}: gap {:e} below {min_gap:e}",
                    hi - lo
                )));
            }
        }
        Ok(walls)
    }

    /// Samples continuous walls at the nodes and also checks
    /// `h¹ ≤ 0 ≤ h²` on the boundary of the domain.
    pub fn from_functions(
        grid: &Grid,
        lower: impl Fn(&[f64]) -> f64,
        upper: impl Fn(&[f64]) -> f64,
    ) -> Result<Self> {
        let lo = ScalarField::from_fn(*grid, &lower).map_err(|e| Error::Walls(format!("lower wall: {e}")))?;
        let hi = ScalarField::from_fn(*grid, &upper).map_err(|e| Error::Walls(format!("upper wall: {e}")))?;
        let walls = Self::new(lo, hi)?;
        for p in boundary_points(grid) {
            let (lo, hi) = (lower(p.as_slice()), upper(p.as_slice()));
            if !(lo <= 0.0 && hi >= 0.0) {
                return Err(Error::Walls(format!(
                    "boundary compatibility violated at {:?}: need lower {lo} <= 0 <= upper {hi}",
                    p.as_slice()
                )));
            }
        }
        Ok(walls)
    }

    pub fn constant(grid: &Grid, lower: f64, upper: f64) -> Result<Self> {
        Self::from_functions(grid, |_| lower, |_| upper)
    }

    pub fn lower(&self) -> &ScalarField {
        &self.lower
    }

    pub fn upper(&self) -> &ScalarField {
        &self.upper
    }

    pub fn grid(&self) -> &Grid {
        self.lower.grid()
    }

    /// Tolerance used to identify the contact sets, `1e-7 (1 + ‖h‖∞)`.
    pub fn contact_tol(&self) -> f64 {
        1e-7 * (1.0 + self.lower.sup_norm().max(self.upper.sup_norm()))
    }
}

/// Points on `∂D` at which boundary compatibility of the walls is checked:
/// the endpoints in 1D; the corners and the projections of all nodes onto
/// the four edges in 2D.
fn boundary_points(grid: &Grid) -> Vec<Point> {
    match grid.dim() {
        1 => vec![Point::new(&[0.0]), Point::new(&[1.0])],
        _ => {
            let mut pts = Vec::new();
            let ticks: Vec<f64> = std::iter::once(0.0)
                .chain((1..=grid.n()).map(|i| i as f64 * grid.spacing()))
                .chain(std::iter::once(1.0))
                .collect();
            for &t in &ticks {
                pts.push(Point::new(&[t, 0.0]));
                pts.push(Point::new(&[t, 1.0]));
                pts.push(Point::new(&[0.0, t]));
                pts.push(Point::new(&[1.0, t]));
            }
            pts
        }
    }
}

/// Penalty scales and the geometric schedule of the double limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyParams {
    /// Upper-wall penalty scale at the first stage.
    pub epsilon: f64,
    /// Lower-wall penalty scale at the first stage (used by [`solve_penalized`]).
    pub delta: f64,
    /// Geometric decay factor of both scales per stage.
    pub factor: f64,
    pub stages: usize,
}

impl Default for PenaltyParams {
    fn default() -> Self {
        PenaltyParams {
            epsilon: 1e-2,
            delta: 1e-4,
            factor: 0.25,
            stages: 8,
        }
    }
}

impl PenaltyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::param("epsilon", "must be positive"));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::param("delta", "must be positive"));
        }
        if !(self.factor > 0.0 && self.factor < 1.0) {
            return Err(Error::param("factor", "must lie in (0, 1)"));
        }
        if self.stages == 0 {
            return Err(Error::param("stages", "need at least one stage"));
        }
        Ok(())
    }

    pub fn epsilon_at(&self, stage: usize) -> f64 {
        self.epsilon * self.factor.powi(stage as i32)
    }

    pub fn delta_at(&self, stage: usize) -> f64 {
        self.delta * self.factor.powi(stage as i32)
    }
}

/// Node masses of the reflection measures `η` (lower wall) and `ξ` (upper wall).
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionMeasures {
    eta: Vec<f64>,
    xi: Vec<f64>,
}

impl ReflectionMeasures {
    pub fn new(eta: Vec<f64>, xi: Vec<f64>) -> Result<Self> {
        let m = Self::new_unchecked(eta, xi);
        if m.eta.len() != m.xi.len() {
            return Err(Error::GridMismatch {
                expected: m.eta.len(),
                found: m.xi.len(),
            });
        }
        for i in 0..m.eta.len() {
            let (e, x) = (m.eta[i], m.xi[i]);
            if !(e.is_finite() && x.is_finite()) {
                return Err(Error::NonFinite { node: i });
            }
            if e < 0.0 || x < 0.0 {
                return Err(Error::Internal(format!("negative measure mass at node {i}")));
            }
            if e > 0.0 && x > 0.0 {
                return Err(Error::Internal(format!("overlapping measure supports at node {i}")));
            }
        }
        Ok(m)
    }

    /// Skips validation; [`check_solution`] reports any violated invariant.
    pub fn new_unchecked(eta: Vec<f64>, xi: Vec<f64>) -> Self {
        ReflectionMeasures { eta, xi }
    }

    pub fn zeros(len: usize) -> Self {
        ReflectionMeasures {
            eta: vec![0.0; len],
            xi: vec![0.0; len],
        }
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn eta_mass(&self) -> f64 {
        self.eta.iter().sum()
    }

    pub fn xi_mass(&self) -> f64 {
        self.xi.iter().sum()
    }
}

/// Per-clause residual magnitudes recorded with a solution.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ResidualReport {
    /// `max(h¹ − u, u − h², 0)` over nodes.
    pub wall_violation: f64,
    /// `Σ η_i (u_i − h¹_i)`.
    pub lower_complementarity: f64,
    /// `Σ ξ_i (h²_i − u_i)`.
    pub upper_complementarity: f64,
    /// `max_i |r_i · cell_volume − (η_i − ξ_i)|`.
    pub identity_residual: f64,
    /// Residual mass on nodes touching neither wall.
    pub off_contact_mass: f64,
    pub eta_mass: f64,
    pub xi_mass: f64,
}

/// `(u, η, ξ)` together with `z = u − v` and its residual certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionTriplet {
    pub u: ScalarField,
    pub z: ScalarField,
    pub measures: ReflectionMeasures,
    pub report: ResidualReport,
}

/// Inputs shared by every deterministic solver: grid, drift `f`, the field
/// `v`, and the walls.
#[derive(Debug, Clone, Copy)]
pub struct ObstacleProblem<'a> {
    pub grid: &'a Grid,
    pub drift: &'a Drift,
    pub v: &'a ScalarField,
    pub walls: &'a WallPair,
}

impl<'a> ObstacleProblem<'a> {
    pub fn new(grid: &'a Grid, drift: &'a Drift, v: &'a ScalarField, walls: &'a WallPair) -> Result<Self> {
        let p = ObstacleProblem { grid, drift, v, walls };
        p.validate()?;
        Ok(p)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        for f in [self.v, self.walls.lower(), self.walls.upper()] {
            if f.grid() != self.grid {
                return Err(Error::GridMismatch {
                    expected: self.grid.len(),
                    found: f.len(),
                });
            }
        }
        Ok(())
    }

    /// `−Δ_h v`
    pub(crate) fn source(&self) -> Vec<f64> {
        self.grid.neg_laplacian(self.v.values())
    }

    /// Default starting point `u₀ = clip(v, h¹, h²)`, i.e. `z₀ = clip(0, h¹ − v, h² − v)`.
    pub(crate) fn clipped_start(&self) -> Vec<f64> {
        let (lo, hi) = (self.walls.lower().values(), self.walls.upper().values());
        self.v
            .values()
            .iter()
            .enumerate()
            .map(|(i, &v)| v.clamp(lo[i], hi[i]))
            .collect()
    }
}
