//! Space white noise on the grid cells, the drift/diffusion coefficients, and
//! the Green-kernel stochastic convolution `v(x) = ∫ G(x, y) σ(y, u(y)) W(dy)`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::green::GreenKernel;
use crate::grid::{Grid, ScalarField};

/// A coefficient evaluated at a node coordinate and a state value.
pub type NodeFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;
/// A function of the node coordinate only.
pub type SpaceFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Mixes a base seed with a replicate index into an independent stream seed.
pub fn derive_seed(base_seed: u64, replicate: u64) -> u64 {
    splitmix64(base_seed ^ splitmix64(replicate.wrapping_add(0x632b_e59b_d9b4_e019)))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One realisation of the cell increments `ΔW_j ~ N(0, cell_volume)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSample {
    grid: Grid,
    increments: Vec<f64>,
    seed: u64,
}

impl NoiseSample {
    /// Wraps externally supplied increments (e.g. a deterministic probe vector).
    pub fn from_increments(grid: Grid, increments: Vec<f64>, seed: u64) -> Result<Self> {
        grid.check_len(increments.len())?;
        Ok(NoiseSample {
            grid,
            increments,
            seed,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Draws i.i.d. `N(0, cell_volume)` increments from a ChaCha8 stream seeded
/// with `seed`; normals use the ziggurat sampler of `rand_distr`.
pub fn sample_white_noise(grid: &Grid, seed: u64) -> NoiseSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = grid.cell_volume().sqrt();
    let increments = (0..grid.len())
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    NoiseSample {
        grid: *grid,
        increments,
        seed,
    }
}

/// Drift `f(x, s)`, required to be nondecreasing in the state `s`.
#[derive(Clone)]
pub enum Drift {
    Zero,
    /// `f(x, s) = offset(x) + slope · s`, `slope ≥ 0`.
    Affine { offset: SpaceFn, slope: f64 },
    /// `f(s) = c0 + c1 s + c3 s³`.
    Cubic { c0: f64, c1: f64, c3: f64 },
    Custom {
        value: NodeFn,
        derivative: Option<NodeFn>,
    },
}

impl fmt::Debug for Drift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Drift::Zero => write!(f, "Drift::Zero"),
            Drift::Affine { slope, .. } => write!(f, "Drift::Affine {{ slope: {slope}, .. }}"),
            Drift::Cubic { c0, c1, c3 } => {
                write!(f, "Drift::Cubic {{ c0: {c0}, c1: {c1}, c3: {c3} }}")
            }
            Drift::Custom { .. } => write!(f, "Drift::Custom"),
        }
    }
}

impl Drift {
    pub fn linear(c0: f64, c1: f64) -> Self {
        Drift::Affine {
            offset: Arc::new(move |_| c0),
            slope: c1,
        }
    }

    pub fn affine(offset: impl Fn(&[f64]) -> f64 + Send + Sync + 'static, slope: f64) -> Self {
        Drift::Affine {
            offset: Arc::new(offset),
            slope,
        }
    }

    pub fn custom(value: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static) -> Self {
        Drift::Custom {
            value: Arc::new(value),
            derivative: None,
        }
    }

    #[inline]
    pub fn value(&self, x: &[f64], s: f64) -> f64 {
        match self {
            Drift::Zero => 0.0,
            Drift::Affine { offset, slope } => offset(x) + slope * s,
            Drift::Cubic { c0, c1, c3 } => c0 + c1 * s + c3 * s * s * s,
            Drift::Custom { value, .. } => value(x, s),
        }
    }

    /// Derivative in the state, clamped at zero. Custom drifts without an
    /// explicit derivative use a central difference.
    #[inline]
    pub fn derivative(&self, x: &[f64], s: f64) -> f64 {
        let d = match self {
            Drift::Zero => 0.0,
            Drift::Affine { slope, .. } => *slope,
            Drift::Cubic { c1, c3, .. } => c1 + 3.0 * c3 * s * s,
            Drift::Custom {
                derivative: Some(d),
                ..
            } => d(x, s),
            Drift::Custom { value, .. } => {
                let h = 1e-6 * (1.0 + s.abs());
                (value(x, s + h) - value(x, s - h)) / (2.0 * h)
            }
        };
        d.max(0.0)
    }

    /// Returns `(offset, slope)` when the drift is affine in the state.
    pub fn as_affine(&self) -> Option<(SpaceFn, f64)> {
        match self {
            Drift::Zero => Some((Arc::new(|_| 0.0), 0.0)),
            Drift::Affine { offset, slope } => Some((offset.clone(), *slope)),
            Drift::Cubic { c0, c1, c3 } if *c3 == 0.0 => {
                let c0 = *c0;
                Some((Arc::new(move |_| c0), *c1))
            }
            _ => None,
        }
    }

    /// Randomised spot check of monotonicity in the state.
    pub fn check_monotone(&self, dim: usize, check: &SpotCheck) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(check.seed);
        for _ in 0..check.samples {
            let x = check.point(&mut rng, dim);
            let (a, b) = (check.state(&mut rng), check.state(&mut rng));
            let (s1, s2) = if a <= b { (a, b) } else { (b, a) };
            let (f1, f2) = (self.value(&x, s1), self.value(&x, s2));
            if !(f1.is_finite() && f2.is_finite()) || f1 > f2 + 1e-12 * f1.abs().max(f2.abs()).max(1.0)
            {
                return Err(Error::NotMonotone { x, s1, s2, f1, f2 });
            }
        }
        Ok(())
    }
}

/// Diffusion coefficient `σ(x, s)` with its declared Lipschitz constant `C_σ`.
#[derive(Clone)]
pub struct Diffusion {
    value: NodeFn,
    lipschitz: f64,
}

impl fmt::Debug for Diffusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Diffusion")
            .field("lipschitz", &self.lipschitz)
            .finish_non_exhaustive()
    }
}

impl Diffusion {
    pub fn constant(c: f64) -> Self {
        Diffusion {
            value: Arc::new(move |_, _| c),
            lipschitz: 0.0,
        }
    }

    /// `σ(s) = slope · s + intercept`.
    pub fn affine(slope: f64, intercept: f64) -> Self {
        Diffusion {
            value: Arc::new(move |_, s| slope * s + intercept),
            lipschitz: slope.abs(),
        }
    }

    pub fn custom(value: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static, lipschitz: f64) -> Self {
        Diffusion {
            value: Arc::new(value),
            lipschitz,
        }
    }

    #[inline]
    pub fn value(&self, x: &[f64], s: f64) -> f64 {
        (self.value)(x, s)
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn check_lipschitz(&self, dim: usize, check: &SpotCheck) -> Result<()> {
        if !(self.lipschitz >= 0.0 && self.lipschitz.is_finite()) {
            return Err(Error::param("C_sigma", "must be finite and nonnegative"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(check.seed ^ 0x5151);
        for _ in 0..check.samples {
            let x = check.point(&mut rng, dim);
            let (s1, s2) = (check.state(&mut rng), check.state(&mut rng));
            let d = (self.value(&x, s1) - self.value(&x, s2)).abs();
            if !d.is_finite() || d > self.lipschitz * (s1 - s2).abs() + 1e-12 {
                return Err(Error::NotLipschitz {
                    x,
                    s1,
                    s2,
                    bound: self.lipschitz,
                });
            }
        }
        Ok(())
    }
}

/// Sampling plan for the construction-time coefficient checks.
#[derive(Debug, Clone, Copy)]
pub struct SpotCheck {
    pub samples: usize,
    /// States are drawn uniformly from `[-state_range, state_range]`.
    pub state_range: f64,
    pub seed: u64,
}

impl Default for SpotCheck {
    fn default() -> Self {
        SpotCheck {
            samples: 512,
            state_range: 10.0,
            seed: 0x7a11_5eed,
        }
    }
}

impl SpotCheck {
    fn point(&self, rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
        (0..dim).map(|_| rng.random::<f64>()).collect()
    }

    fn state(&self, rng: &mut ChaCha8Rng) -> f64 {
        self.state_range * (2.0 * rng.random::<f64>() - 1.0)
    }
}

/// The drift `f` and diffusion `σ` of the reflected equation.
#[derive(Debug, Clone)]
pub struct CoefficientPair {
    pub drift: Drift,
    pub diffusion: Diffusion,
}

impl CoefficientPair {
    /// Builds the pair after spot-checking monotonicity of `f` and the
    /// Lipschitz bound of `σ` on `(0,1)^dim`.
    pub fn new(drift: Drift, diffusion: Diffusion, dim: usize) -> Result<Self> {
        Self::with_check(drift, diffusion, dim, &SpotCheck::default())
    }

    pub fn with_check(drift: Drift, diffusion: Diffusion, dim: usize, check: &SpotCheck) -> Result<Self> {
        drift.check_monotone(dim, check)?;
        diffusion.check_lipschitz(dim, check)?;
        Ok(CoefficientPair { drift, diffusion })
    }
}

/// `v[i] = Σ_j g[i][j] σ(y_j, u[j]) ΔW_j`; the increments already carry the
/// cell measure.
pub fn stochastic_convolution(
    kernel: &GreenKernel,
    coeff: &CoefficientPair,
    u: &ScalarField,
    noise: &NoiseSample,
) -> Result<ScalarField> {
    let grid = kernel.grid();
    if u.grid() != grid {
        return Err(Error::GridMismatch {
            expected: grid.len(),
            found: u.len(),
        });
    }
    if noise.grid() != grid {
        return Err(Error::GridMismatch {
            expected: grid.len(),
            found: noise.increments.len(),
        });
    }
    let weights: Vec<f64> = grid
        .points()
        .zip(u.values())
        .zip(&noise.increments)
        .map(|((p, &s), &dw)| coeff.diffusion.value(p.as_slice(), s) * dw)
        .collect();
    ScalarField::new(*grid, apply_kernel(kernel, &weights))
}

pub(crate) fn apply_kernel(kernel: &GreenKernel, weights: &[f64]) -> Vec<f64> {
    (0..weights.len())
        .map(|i| kernel.row(i).iter().zip(weights).map(|(g, w)| g * w).sum())
        .collect()
}
