//! Turns a [`ProblemSpec`] into solver inputs.

use std::path::Path;

use twowall::noise::SpotCheck;
use twowall::obstacle::{PenaltyParams, WallPair};
use twowall::picard::{ContractionInputs, PicardOptions};
use twowall::{CoefficientPair, Diffusion, Drift, Grid, GreenKernel, ScalarField};

use crate::config::{ConditionSpec, DiffusionSpec, DriftSpec, FieldSpec, ProblemSpec, WallSpec};
use crate::error::CliError;
use crate::expr::{diffusion_from_expression, drift_from_expression, parse_expression, space_fn, space_vars};

pub fn grid(spec: &ProblemSpec) -> Result<Grid, CliError> {
    Ok(Grid::new(spec.dim, spec.n)?)
}

pub fn walls(spec: &ProblemSpec, grid: &Grid) -> Result<WallPair, CliError> {
    Ok(match &spec.walls {
        WallSpec::Constant { lower, upper } => WallPair::constant(grid, *lower, *upper)?,
        WallSpec::Expression { lower, upper } => {
            let lo = space_fn(parse_expression(lower, space_vars(spec.dim))?);
            let hi = space_fn(parse_expression(upper, space_vars(spec.dim))?);
            WallPair::from_functions(grid, lo, hi)?
        }
    })
}

pub fn drift(spec: &ProblemSpec) -> Result<Drift, CliError> {
    let check = SpotCheck::default();
    let drift = match &spec.drift {
        DriftSpec::Zero => Drift::Zero,
        DriftSpec::Linear { c0, c1 } => Drift::linear(*c0, *c1),
        DriftSpec::Cubic { c0, c1, c3 } => Drift::Cubic {
            c0: *c0,
            c1: *c1,
            c3: *c3,
        },
        DriftSpec::Expression { expr } => return drift_from_expression(expr, spec.dim, &check),
    };
    drift.check_monotone(spec.dim, &check)?;
    Ok(drift)
}

pub fn diffusion(spec: &ProblemSpec) -> Result<Diffusion, CliError> {
    Ok(match &spec.diffusion {
        DiffusionSpec::Constant { value } => Diffusion::constant(*value),
        DiffusionSpec::Affine { slope, intercept } => Diffusion::affine(*slope, *intercept),
        DiffusionSpec::Expression { expr, lipschitz } => {
            diffusion_from_expression(expr, *lipschitz, spec.dim, &SpotCheck::default())?
        }
    })
}

pub fn coefficients(spec: &ProblemSpec) -> Result<CoefficientPair, CliError> {
    Ok(CoefficientPair::new(drift(spec)?, diffusion(spec)?, spec.dim)?)
}

pub fn field_v(spec: &ProblemSpec, grid: &Grid) -> Result<ScalarField, CliError> {
    match &spec.v {
        FieldSpec::Zero => Ok(ScalarField::zeros(*grid)),
        FieldSpec::Expression { expr } => {
            let f = space_fn(parse_expression(expr, space_vars(spec.dim))?);
            Ok(ScalarField::from_fn(*grid, f)?)
        }
        FieldSpec::File { path } => read_field(path, grid),
    }
}

/// Reads node values from the `v` (or else `u`) column of a CSV file.
fn read_field(path: &Path, grid: &Grid) -> Result<ScalarField, CliError> {
    let bad = |message: String| CliError::FieldFile {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let column = headers
        .iter()
        .position(|h| h == "v")
        .or_else(|| headers.iter().position(|h| h == "u"))
        .ok_or_else(|| bad("no `v` or `u` column".into()))?;
    let mut values = Vec::with_capacity(grid.len());
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let cell = record.get(column).unwrap_or("");
        values.push(cell.parse::<f64>().map_err(|_| bad(format!("row {row}: cannot parse {cell:?}")))?);
    }
    if values.len() != grid.len() {
        return Err(bad(format!("expected {} rows, found {}", grid.len(), values.len())));
    }
    Ok(ScalarField::new(*grid, values)?)
}

pub fn penalty(spec: &ProblemSpec) -> PenaltyParams {
    PenaltyParams {
        epsilon: spec.penalty.epsilon0,
        delta: spec.penalty.delta0,
        factor: spec.penalty.rho,
        stages: spec.penalty.stages,
    }
}

pub fn default_lambda(dim: usize) -> f64 {
    if dim == 1 {
        1.0
    } else {
        0.5
    }
}

/// Condition inputs with unset entries filled from the kernel. Also
/// returns the empirical `B̂`.
pub fn condition_inputs(
    cond: &ConditionSpec,
    grid: &Grid,
    kernel: &GreenKernel,
    c_sigma: f64,
) -> Result<(ContractionInputs, f64), CliError> {
    let lambda = cond.lambda.unwrap_or(default_lambda(grid.dim()));
    let b_hat = twowall::green_holder_constant(grid, kernel, lambda)?;
    let mut inputs = ContractionInputs::from_kernel(
        grid,
        kernel,
        cond.p,
        lambda,
        cond.csigma.unwrap_or(c_sigma),
        Some(cond.a),
        cond.cp,
        Some(cond.b.unwrap_or(b_hat)),
    )?;
    if let Some(rd) = cond.rd {
        inputs.r_d = rd;
        inputs.validate()?;
    }
    Ok((inputs, b_hat))
}

pub fn picard_options(spec: &ProblemSpec, condition: Option<ContractionInputs>) -> PicardOptions {
    PicardOptions {
        max_iter: spec.picard.max_iter,
        tol: spec.picard.tol,
        obstacle_tol: spec.tol,
        penalty: penalty(spec),
        initial_guess: None,
        condition,
    }
}
