//! Elliptic PDEs and SPDEs reflected between two walls,
//!
//! ```text
//! −Δu + f(u) = σ(u) Ẇ + η − ξ  on D = (0,1)^k,   h¹ ≤ u ≤ h²,   u = 0 on ∂D,
//! ```
//!
//! solved on a uniform finite-difference grid (`k ∈ {1, 2}`).
//!
//! * [`grid`]: domain, nodal fields, the discrete Laplacian.
//! * [`green`]: Green kernels and the constants `C_D`, `B`.
//! * [`noise`]: cell white noise, coefficients, the stochastic convolution.
//! * [`obstacle`]: the deterministic two-wall problem and its oracles.
//! * [`picard`]: the pathwise Picard iteration and the contraction condition.
//! * [`ensemble`]: seeded Monte Carlo ensembles.

pub mod ensemble;
pub mod error;
pub mod green;
pub mod grid;
mod linalg;
pub mod noise;
pub mod obstacle;
pub mod picard;

pub use ensemble::{
    estimate_sup_moment, geometric_decay_fit, run_ensemble, stage_moment_ratio, EnsembleConfig, EnsembleSummary,
    ReplicateRecord, SpdeProblem,
};
pub use error::{Error, ErrorCategory, Result};
pub use green::{discrete_green, green_1d_analytic, green_holder_constant, green_sup_l2, GreenKernel};
pub use grid::{laplacian_apply, Grid, Point, ScalarField};
pub use noise::{
    derive_seed, sample_white_noise, stochastic_convolution, CoefficientPair, Diffusion, Drift, NoiseSample,
};
pub use obstacle::{
    check_solution, extract_measures, solve_active_set_enum, solve_penalized, solve_psor, solve_single_wall,
    solve_two_wall, ObstacleProblem, PenaltyParams, ReflectionMeasures, SolutionTriplet, WallPair,
};
pub use picard::{
    contraction_condition, pathwise_lipschitz_probe, picard_solve, ContractionInputs, PicardDiagnostics,
    PicardOptions,
};
