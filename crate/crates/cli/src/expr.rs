//! Arithmetic expressions in `x`, `y` and `u`, backed by `meval`.

use std::sync::Arc;

use meval::{Context, ContextProvider, Expr, FuncEvalError};
use twowall::noise::SpotCheck;
use twowall::{Diffusion, Drift};

use crate::error::CliError;

thread_local! {
    static BUILTINS: Context<'static> = Context::new();
}

/// A parsed expression with its variables bound by name.
#[derive(Debug, Clone)]
pub struct Expression {
    text: String,
    expr: Expr,
    vars: &'static [&'static str],
}

struct Bindings<'a> {
    names: &'static [&'static str],
    values: &'a [f64],
}

impl ContextProvider for Bindings<'_> {
    fn get_var(&self, name: &str) -> Option<f64> {
        if let Some(k) = self.names.iter().position(|n| *n == name) {
            return Some(self.values[k]);
        }
        BUILTINS.with(|c| c.get_var(name))
    }

    fn eval_func(&self, name: &str, args: &[f64]) -> Result<f64, FuncEvalError> {
        BUILTINS.with(|c| c.eval_func(name, args))
    }
}

impl Expression {
    pub fn text(&self) -> &str {
        &self.text
    }

    /// Evaluates with `values` bound to the variables in declaration order.
    /// Evaluation errors were ruled out at parse time, so they map to NaN and
    /// are caught by the finiteness checks downstream.
    pub fn eval(&self, values: &[f64]) -> f64 {
        let ctx = Bindings {
            names: self.vars,
            values,
        };
        self.expr.eval_with_context(ctx).unwrap_or(f64::NAN)
    }
}

pub const SPACE_VARS_1D: &[&str] = &["x"];
pub const SPACE_VARS_2D: &[&str] = &["x", "y"];
pub const STATE_VARS_1D: &[&str] = &["x", "u"];
pub const STATE_VARS_2D: &[&str] = &["x", "y", "u"];

pub fn space_vars(dim: usize) -> &'static [&'static str] {
    if dim == 1 {
        SPACE_VARS_1D
    } else {
        SPACE_VARS_2D
    }
}

pub fn state_vars(dim: usize) -> &'static [&'static str] {
    if dim == 1 {
        STATE_VARS_1D
    } else {
        STATE_VARS_2D
    }
}

/// Parses `text` over the variables `vars`. Supports `+ - * / ^`, `sin`,
/// `cos`, `exp`, `min`, `max` and the other `meval` built-ins, and the
/// constants `pi` and `e`.
pub fn parse_expression(text: &str, vars: &'static [&'static str]) -> Result<Expression, CliError> {
    let expr: Expr = text.parse().map_err(|e| syntax_error(text, e))?;
    let probe = Expression {
        text: text.to_string(),
        expr,
        vars,
    };
    // surfaces unknown variables and wrong function arities
    let ctx = Bindings {
        names: vars,
        values: &vec![0.5; vars.len()],
    };
    probe.expr.eval_with_context(ctx).map_err(|e| CliError::Expression {
        text: text.to_string(),
        position: None,
        message: e.to_string(),
    })?;
    Ok(probe)
}

fn syntax_error(text: &str, err: meval::Error) -> CliError {
    let (position, message) = match &err {
        meval::Error::ParseError(meval::ParseError::UnexpectedToken(p)) => (Some(*p), "unexpected token".to_string()),
        meval::Error::ParseError(meval::ParseError::MissingRParen(k)) => {
            (Some(text.len()), format!("missing {k} closing parenthesis"))
        }
        meval::Error::ParseError(meval::ParseError::MissingArgument) => {
            (Some(text.len()), "missing operand or argument".to_string())
        }
        other => (None, other.to_string()),
    };
    CliError::Expression {
        text: text.to_string(),
        position,
        message,
    }
}

/// Splits the flat argument list `(x[, y], u)` into space and state.
fn state_fn(e: Expression, dim: usize) -> impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static {
    let e = Arc::new(e);
    move |x: &[f64], s: f64| {
        let mut args = [0.0; 3];
        args[..dim].copy_from_slice(x);
        args[dim] = s;
        e.eval(&args[..=dim])
    }
}

pub fn space_fn(e: Expression) -> impl Fn(&[f64]) -> f64 + Send + Sync + 'static {
    move |x: &[f64]| e.eval(x)
}

/// Drift from an expression in `x[, y], u`, rejected unless a randomized
/// spot-check finds it nondecreasing in `u`.
pub fn drift_from_expression(text: &str, dim: usize, check: &SpotCheck) -> Result<Drift, CliError> {
    let e = parse_expression(text, state_vars(dim))?;
    let drift = Drift::custom(state_fn(e, dim));
    drift.check_monotone(dim, check)?;
    Ok(drift)
}

/// Diffusion from an expression in `x[, y], u` with a declared Lipschitz
/// constant, spot-checked against that constant.
pub fn diffusion_from_expression(
    text: &str,
    lipschitz: f64,
    dim: usize,
    check: &SpotCheck,
) -> Result<Diffusion, CliError> {
    let e = parse_expression(text, state_vars(dim))?;
    let d = Diffusion::custom(state_fn(e, dim), lipschitz);
    d.check_lipschitz(dim, check)?;
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates() {
        let e = parse_expression("4*x*(1-x)", SPACE_VARS_1D).unwrap();
        assert_eq!(e.eval(&[0.5]), 1.0);
        let e = parse_expression("max(x, u^2) + sin(pi*y)", STATE_VARS_2D).unwrap();
        assert!((e.eval(&[0.1, 0.5, 2.0]) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn syntax_errors_carry_a_position() {
        match parse_expression("4*x*)", SPACE_VARS_1D) {
            Err(CliError::Expression { position, .. }) => assert_eq!(position, Some(4)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_expression("4*x*(1-", SPACE_VARS_1D),
            Err(CliError::Expression { position: Some(7), .. })
        ));
    }

    #[test]
    fn unknown_variables_are_rejected() {
        assert!(parse_expression("u + 1", SPACE_VARS_1D).is_err());
        assert!(parse_expression("y", SPACE_VARS_1D).is_err());
    }

    #[test]
    fn monotonicity_spot_check() {
        let check = SpotCheck::default();
        assert!(drift_from_expression("u^3 + u", 1, &check).is_ok());
        match drift_from_expression("-u", 1, &check) {
            Err(CliError::Core(twowall::Error::NotMonotone { s1, s2, f1, f2, .. })) => {
                assert!(s1 < s2 && f1 > f2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lipschitz_spot_check() {
        let check = SpotCheck::default();
        assert!(diffusion_from_expression("0.1*u + 0.05", 0.1, 1, &check).is_ok());
        assert!(diffusion_from_expression("2*u", 1.0, 1, &check).is_err());
    }
}
