//! TOML problem files.
//!
//! Every key is optional except `dim`, `n` and `[walls]`; unknown keys are
//! rejected. The effective spec (file plus command-line overrides) is
//! echoed next to every output, and its SHA-256 is the config hash stamped
//! into each artifact. Run-environment settings (`out.dir`,
//! `ensemble.workers`) never affect results and are left out of both.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub dim: usize,
    pub n: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub seed: u64,
    pub walls: WallSpec,
    #[serde(default)]
    pub drift: DriftSpec,
    #[serde(default)]
    pub diffusion: DiffusionSpec,
    #[serde(default)]
    pub v: FieldSpec,
    #[serde(default)]
    pub penalty: PenaltySpec,
    #[serde(default)]
    pub picard: PicardSpec,
    #[serde(default)]
    pub condition: ConditionSpec,
    #[serde(default)]
    pub ensemble: EnsembleSpec,
    #[serde(default, skip_serializing)]
    pub out: OutSpec,
}

fn default_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum WallSpec {
    Constant { lower: f64, upper: f64 },
    /// Expressions in `x` (and `y` when `dim = 2`).
    Expression { lower: String, upper: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DriftSpec {
    #[default]
    Zero,
    /// `c0 + c1 u`
    Linear { c0: f64, c1: f64 },
    /// `c0 + c1 u + c3 u³`
    Cubic { c0: f64, c1: f64, c3: f64 },
    /// Expression in `x[, y], u`.
    Expression { expr: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DiffusionSpec {
    Constant { value: f64 },
    /// `slope · u + intercept`
    Affine { slope: f64, intercept: f64 },
    /// Expression in `x[, y], u` with its Lipschitz constant in `u`.
    Expression { expr: String, lipschitz: f64 },
}

impl Default for DiffusionSpec {
    fn default() -> Self {
        DiffusionSpec::Constant { value: 0.0 }
    }
}

/// The field `v` of the deterministic problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FieldSpec {
    #[default]
    Zero,
    Expression { expr: String },
    /// CSV with a `v` (or `u`) column in node order; `#` lines are comments.
    File { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PenaltySpec {
    pub epsilon0: f64,
    pub rho: f64,
    pub stages: usize,
    /// Lower-wall scale, used only by the doubly penalized solve.
    pub delta0: f64,
}

impl Default for PenaltySpec {
    fn default() -> Self {
        PenaltySpec {
            epsilon0: 1e-2,
            rho: 0.25,
            stages: 8,
            delta0: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PicardSpec {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for PicardSpec {
    fn default() -> Self {
        PicardSpec {
            max_iter: 50,
            tol: 1e-8,
        }
    }
}

/// Inputs of the contraction condition. Unset entries are filled from the
/// problem: `lambda` is 1 in 1D and 1/2 in 2D, `rd` is the domain diameter,
/// `b` is the empirical `B̂`, `csigma` is the diffusion's Lipschitz constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConditionSpec {
    pub p: f64,
    pub a: f64,
    pub cp: Option<f64>,
    pub lambda: Option<f64>,
    pub rd: Option<f64>,
    pub b: Option<f64>,
    pub csigma: Option<f64>,
}

impl Default for ConditionSpec {
    fn default() -> Self {
        ConditionSpec {
            p: 2.0,
            a: twowall::picard::DEFAULT_KOLMOGOROV_A,
            cp: None,
            lambda: None,
            rd: None,
            b: None,
            csigma: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSpec {
    pub replicates: usize,
    pub p: Vec<f64>,
    #[serde(skip_serializing)]
    pub workers: usize,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        EnsembleSpec {
            replicates: 100,
            p: vec![2.0],
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutSpec {
    pub dir: PathBuf,
}

impl Default for OutSpec {
    fn default() -> Self {
        OutSpec { dir: PathBuf::from("out") }
    }
}

impl ProblemSpec {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, CliError> {
        let mut spec: ProblemSpec = toml::from_str(text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        // relative field files are resolved against the problem file
        if let FieldSpec::File { path: p } = &mut spec.v {
            if p.is_relative() {
                if let Some(parent) = path.parent() {
                    *p = parent.join(&*p);
                }
            }
        }
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text, path)
    }

    /// The effective spec as TOML, without run-environment settings.
    pub fn echo(&self) -> String {
        toml::to_string(self).expect("problem spec serializes")
    }

    /// Hex SHA-256 of [`ProblemSpec::echo`].
    pub fn config_hash(&self) -> String {
        hex::encode(Sha256::digest(self.echo().as_bytes()))
    }
}
