//! Picard iteration for the reflected SPDE on one fixed noise path,
//! `u_n = z_n + v_n` with `v_n = ∫ G(·, y) σ(y, u_{n−1}(y)) W(dy)` and `z_n`
//! the two-wall solution for `v_n`, plus the contraction-condition checker.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::green::{check_lambda, green_holder_constant, green_sup_l2, GreenKernel};
use crate::grid::{sup_distance, Grid, ScalarField};
use crate::noise::{derive_seed, sample_white_noise, stochastic_convolution, CoefficientPair, NoiseSample};
use crate::obstacle::{solve_two_wall_from, ObstacleProblem, PenaltyParams, SolutionTriplet, WallPair};

/// Constants entering the sufficient condition for the Picard contraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContractionInputs {
    /// Moment exponent `p > 1`.
    pub p: f64,
    /// Kolmogorov-lemma constant.
    pub a: f64,
    /// Burkholder constant for `p`.
    pub c_p: f64,
    /// Hölder constant of the kernel increments.
    pub b: f64,
    pub lambda: f64,
    /// Domain diameter.
    pub r_d: f64,
    /// `sup_x ∫ G(x, y)² dy`.
    pub c_d: f64,
    /// Lipschitz constant of `σ`.
    pub c_sigma: f64,
    pub k: usize,
}

/// Conventional placeholder constants used when none are supplied. They are
/// not derived quantities.
pub const DEFAULT_KOLMOGOROV_A: f64 = 1.0;
pub const DEFAULT_BURKHOLDER_C2: f64 = 4.0;

impl ContractionInputs {
    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.k) {
            return Err(Error::param("k", format!("{} not in {{1, 2, 3}}", self.k)));
        }
        check_lambda(self.k, self.lambda)?;
        if !(self.p > 1.0) {
            return Err(Error::param("p", "must exceed 1"));
        }
        if !(self.lambda * self.p - self.k as f64 > 0.0) {
            return Err(Error::param(
                "p",
                format!("need lambda * p > k, got {} * {} <= {}", self.lambda, self.p, self.k),
            ));
        }
        for (name, v) in [("a", self.a), ("c_p", self.c_p), ("B", self.b), ("r_D", self.r_d), ("C_D", self.c_d)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, "must be positive"));
            }
        }
        if !(self.c_sigma >= 0.0 && self.c_sigma.is_finite()) {
            return Err(Error::param("C_sigma", "must be nonnegative"));
        }
        Ok(())
    }

    /// Fills `C_D`, `B̂`, `r_D` and `k` from a discrete kernel. `a` and `c_p`
    /// default to the conventional placeholders (only for `p = 2` in the
    /// case of `c_p`); `b_override` replaces the empirical `B̂`.
    pub fn from_kernel(
        grid: &Grid,
        kernel: &GreenKernel,
        p: f64,
        lambda: f64,
        c_sigma: f64,
        a: Option<f64>,
        c_p: Option<f64>,
        b_override: Option<f64>,
    ) -> Result<Self> {
        let c_p = match c_p {
            Some(c) => c,
            None if p == 2.0 => DEFAULT_BURKHOLDER_C2,
            None => return Err(Error::param("c_p", "no default Burkholder constant for p != 2")),
        };
        let b = match b_override {
            Some(b) => b,
            None => green_holder_constant(grid, kernel, lambda)?,
        };
        let inputs = ContractionInputs {
            p,
            a: a.unwrap_or(DEFAULT_KOLMOGOROV_A),
            c_p,
            b,
            lambda,
            r_d: grid.diameter(),
            c_d: green_sup_l2(grid, kernel)?,
            c_sigma,
            k: grid.dim(),
        };
        inputs.validate()?;
        Ok(inputs)
    }
}

/// Term-by-term value of
/// `[2^{2p−1} a c_p B r_D^{λp−k} + 2^{2p−1} c_p C_D^{p/2}] C_σ^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionReport {
    pub holder_term: f64,
    pub sup_term: f64,
    pub sigma_factor: f64,
    pub lhs: f64,
    pub satisfied: bool,
    pub inputs: ContractionInputs,
}

pub fn contraction_condition(inputs: &ContractionInputs) -> Result<ConditionReport> {
    inputs.validate()?;
    let p = inputs.p;
    let two = 2f64.powf(2.0 * p - 1.0);
    let holder_term = two * inputs.a * inputs.c_p * inputs.b * inputs.r_d.powf(inputs.lambda * p - inputs.k as f64);
    let sup_term = two * inputs.c_p * inputs.c_d.powf(p / 2.0);
    let sigma_factor = inputs.c_sigma.powf(p);
    let lhs = (holder_term + sup_term) * sigma_factor;
    Ok(ConditionReport {
        holder_term,
        sup_term,
        sigma_factor,
        lhs,
        satisfied: lhs < 1.0,
        inputs: *inputs,
    })
}

#[derive(Debug, Clone)]
pub struct PicardOptions {
    pub max_iter: usize,
    /// Stop once `‖u_n − u_{n−1}‖∞ ≤ tol` (checked from the second stage on).
    pub tol: f64,
    /// Residual tolerance of each obstacle solve.
    pub obstacle_tol: f64,
    pub penalty: PenaltyParams,
    /// Starting `z` for every obstacle solve; default `clip(0, h¹ − v, h² − v)`.
    pub initial_guess: Option<ScalarField>,
    /// Evaluated and stamped into the diagnostics when present.
    pub condition: Option<ContractionInputs>,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions {
            max_iter: 50,
            tol: 1e-8,
            obstacle_tol: 1e-10,
            penalty: PenaltyParams::default(),
            initial_guess: None,
            condition: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PicardDiagnostics {
    /// `‖u_n − u_{n−1}‖∞` for `n = 1, 2, …` (with `u_0 ≡ 0`).
    pub sup_diffs: Vec<f64>,
    /// `‖v_n − v_{n−1}‖∞` for `n = 1, 2, …` (with `v_0 ≡ 0`).
    pub v_diffs: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub condition: Option<ConditionReport>,
    /// Set when a condition was evaluated and is not satisfied.
    pub outside_proven_regime: bool,
}

#[derive(Debug, Clone)]
pub struct PicardOutcome {
    pub triplet: SolutionTriplet,
    /// The last convolution `v_n`.
    pub v: ScalarField,
    pub diagnostics: PicardDiagnostics,
}

/// Runs the iteration on the noise path drawn from `seed`.
pub fn picard_solve(
    grid: &Grid,
    kernel: &GreenKernel,
    coeff: &CoefficientPair,
    walls: &WallPair,
    seed: u64,
    opts: &PicardOptions,
) -> Result<PicardOutcome> {
    let noise = sample_white_noise(grid, seed);
    picard_solve_with_noise(grid, kernel, coeff, walls, &noise, opts)
}

/// Runs the iteration on a fixed noise realisation, reused at every stage.
/// Hitting `max_iter` is not an error: the outcome is returned with
/// `converged = false`.
pub fn picard_solve_with_noise(
    grid: &Grid,
    kernel: &GreenKernel,
    coeff: &CoefficientPair,
    walls: &WallPair,
    noise: &NoiseSample,
    opts: &PicardOptions,
) -> Result<PicardOutcome> {
    if kernel.grid() != grid || walls.grid() != grid || noise.grid() != grid {
        return Err(Error::GridMismatch {
            expected: grid.len(),
            found: kernel.grid().len(),
        });
    }
    if opts.max_iter < 2 {
        return Err(Error::param("max_iter", "need at least two stages"));
    }
    let condition = opts.condition.as_ref().map(contraction_condition).transpose()?;

    let mut u_prev = ScalarField::zeros(*grid);
    let mut v_prev = ScalarField::zeros(*grid);
    let mut sup_diffs = Vec::new();
    let mut v_diffs = Vec::new();
    let mut converged = false;
    let mut last = None;
    for n in 1..=opts.max_iter {
        let v = stochastic_convolution(kernel, coeff, &u_prev, noise)?;
        let problem = ObstacleProblem::new(grid, &coeff.drift, &v, walls)?;
        let stages = solve_two_wall_from(&problem, &opts.penalty, opts.obstacle_tol, opts.initial_guess.as_ref())?;
        let triplet = stages.triplet;
        sup_diffs.push(sup_distance(triplet.u.values(), u_prev.values()));
        v_diffs.push(sup_distance(v.values(), v_prev.values()));
        u_prev = triplet.u.clone();
        v_prev = v.clone();
        last = Some((triplet, v));
        if n >= 2 && sup_diffs[n - 1] <= opts.tol {
            converged = true;
            break;
        }
    }
    let (triplet, v) = last.ok_or_else(|| Error::Internal("no Picard stage ran".into()))?;
    let outside = condition.is_some_and(|c| !c.satisfied);
    Ok(PicardOutcome {
        triplet,
        v,
        diagnostics: PicardDiagnostics {
            iterations: sup_diffs.len(),
            sup_diffs,
            v_diffs,
            converged,
            condition,
            outside_proven_regime: outside,
        },
    })
}

/// `‖v − v̂‖∞ / ‖u − û‖∞` for convolutions on the same noise; `None` when
/// `u = û`.
pub fn lipschitz_ratio(
    kernel: &GreenKernel,
    coeff: &CoefficientPair,
    noise: &NoiseSample,
    u: &ScalarField,
    u_hat: &ScalarField,
) -> Result<Option<f64>> {
    let du = u.sup_distance(u_hat)?;
    if du == 0.0 {
        return Ok(None);
    }
    let v = stochastic_convolution(kernel, coeff, u, noise)?;
    let v_hat = stochastic_convolution(kernel, coeff, u_hat, noise)?;
    Ok(Some(v.sup_distance(&v_hat)? / du))
}

/// Largest pathwise ratio `‖v − v̂‖∞ / ‖u − û‖∞` over `trials` random pairs
/// with entries uniform in `[−1, 1]`, all on the noise path of `seed`.
pub fn pathwise_lipschitz_probe(
    grid: &Grid,
    kernel: &GreenKernel,
    coeff: &CoefficientPair,
    seed: u64,
    trials: usize,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::param("trials", "need at least one trial"));
    }
    let noise = sample_white_noise(grid, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, u64::MAX));
    let random_field = |rng: &mut ChaCha8Rng| {
        ScalarField::new(*grid, (0..grid.len()).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect())
    };
    let mut best = 0.0f64;
    for _ in 0..trials {
        let u = random_field(&mut rng)?;
        let u_hat = random_field(&mut rng)?;
        if let Some(r) = lipschitz_ratio(kernel, coeff, &noise, &u, &u_hat)? {
            best = best.max(r);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn reference() -> ContractionInputs {
        ContractionInputs {
            p: 2.0,
            a: 1.0,
            c_p: 4.0,
            b: 1.0,
            lambda: 1.0,
            r_d: 1.0,
            c_d: 1.0 / 48.0,
            c_sigma: 0.1,
            k: 1,
        }
    }

    #[test]
    fn reference_condition() {
        let r = contraction_condition(&reference()).unwrap();
        assert_abs_diff_eq!(r.holder_term, 32.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.sup_term, 32.0 / 48.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.lhs, 0.326_666_666_666_666_7, epsilon = 1e-12);
        assert!(r.satisfied);

        let r2 = contraction_condition(&ContractionInputs {
            c_sigma: 0.2,
            ..reference()
        })
        .unwrap();
        assert_abs_diff_eq!(r2.lhs, 1.306_666_666_666_666_7, epsilon = 1e-12);
        assert!(!r2.satisfied);
    }

    #[test]
    fn additive_noise_always_satisfied() {
        let r = contraction_condition(&ContractionInputs {
            c_sigma: 0.0,
            ..reference()
        })
        .unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.satisfied);
    }

    #[test]
    fn invariant_violations() {
        let bad_lambda = ContractionInputs {
            lambda: 1.0,
            k: 2,
            ..reference()
        };
        assert!(contraction_condition(&bad_lambda).is_err());
        // λ p must exceed k
        let bad_p = ContractionInputs {
            lambda: 0.4,
            p: 2.0,
            ..reference()
        };
        assert!(contraction_condition(&bad_p).is_err());
        let k3 = ContractionInputs {
            k: 3,
            lambda: 0.4,
            p: 10.0,
            r_d: 3f64.sqrt(),
            ..reference()
        };
        assert!(contraction_condition(&k3).is_ok());
        assert!(contraction_condition(&ContractionInputs { k: 3, lambda: 0.5, p: 10.0, ..reference() }).is_err());
        assert!(contraction_condition(&ContractionInputs { c_p: 0.0, ..reference() }).is_err());
    }
}
