//! Seeded Monte Carlo ensembles of Picard solves and their summary
//! statistics. Replicate `r` always runs on the noise path of
//! `derive_seed(base_seed, r)`, so summaries do not depend on scheduling.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::green::GreenKernel;
use crate::grid::Grid;
use crate::noise::{derive_seed, CoefficientPair};
use crate::obstacle::WallPair;
use crate::picard::{picard_solve, PicardOptions};

/// Everything a single replicate needs.
#[derive(Debug, Clone)]
pub struct SpdeProblem {
    pub grid: Grid,
    pub kernel: GreenKernel,
    pub coeff: CoefficientPair,
    pub walls: WallPair,
    pub options: PicardOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub replicates: usize,
    pub base_seed: u64,
    pub p_list: Vec<f64>,
    /// Worker threads; 0 uses the global pool.
    pub workers: usize,
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::param("replicates", "need at least one replicate"));
        }
        if let Some(p) = self.p_list.iter().find(|p| !(**p > 1.0)) {
            return Err(Error::param("p_list", format!("moment exponent {p} must exceed 1")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateRecord {
    pub index: usize,
    pub seed: u64,
    /// `‖u‖∞` of the final iterate; absent when the replicate failed.
    pub sup_u: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub sup_diffs: Vec<f64>,
    pub v_diffs: Vec<f64>,
    pub error: Option<String>,
}

impl ReplicateRecord {
    pub fn succeeded(&self) -> bool {
        self.converged && self.error.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub p: f64,
    pub estimate: f64,
    pub standard_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub rate: f64,
    /// Number of points used after truncation.
    pub points: usize,
    /// True when the series was cut at its first nonpositive entry.
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub records: Vec<ReplicateRecord>,
    pub moments: Vec<MomentEstimate>,
    /// Mean `‖u_n − u_{n−1}‖∞` across successful replicates, from stage 2.
    pub mean_stage_diffs: Vec<f64>,
    pub decay: Option<DecayFit>,
    pub failures: usize,
}

fn run_replicate(problem: &SpdeProblem, base_seed: u64, index: usize) -> ReplicateRecord {
    let seed = derive_seed(base_seed, index as u64);
    match picard_solve(&problem.grid, &problem.kernel, &problem.coeff, &problem.walls, seed, &problem.options) {
        Ok(out) => ReplicateRecord {
            index,
            seed,
            sup_u: Some(out.triplet.u.sup_norm()),
            iterations: out.diagnostics.iterations,
            converged: out.diagnostics.converged,
            sup_diffs: out.diagnostics.sup_diffs,
            v_diffs: out.diagnostics.v_diffs,
            error: None,
        },
        Err(e) => ReplicateRecord {
            index,
            seed,
            sup_u: None,
            iterations: 0,
            converged: false,
            sup_diffs: Vec::new(),
            v_diffs: Vec::new(),
            error: Some(e.to_string()),
        },
    }
}

/// Runs every replicate (in parallel when `workers != 1`) and summarises.
/// Individual failures are recorded and counted; only a fully failed
/// ensemble is an error.
pub fn run_ensemble(problem: &SpdeProblem, config: &EnsembleConfig) -> Result<EnsembleSummary> {
    config.validate()?;
    let run = || -> Vec<ReplicateRecord> {
        (0..config.replicates)
            .into_par_iter()
            .map(|r| run_replicate(problem, config.base_seed, r))
            .collect()
    };
    let records = if config.workers == 0 {
        run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?
            .install(run)
    };
    summarize(records, &config.p_list)
}

/// Builds the summary from records in index order.
pub fn summarize(records: Vec<ReplicateRecord>, p_list: &[f64]) -> Result<EnsembleSummary> {
    let failures = records.iter().filter(|r| !r.succeeded()).count();
    if failures == records.len() {
        return Err(Error::AllReplicatesFailed(records.len()));
    }
    let good: Vec<&ReplicateRecord> = records.iter().filter(|r| r.succeeded()).collect();
    let sups: Vec<f64> = good.iter().filter_map(|r| r.sup_u).collect();
    let moments = if sups.len() >= 2 {
        p_list
            .iter()
            .map(|&p| {
                estimate_sup_moment(&sups, p).map(|(estimate, standard_error)| MomentEstimate {
                    p,
                    estimate,
                    standard_error,
                })
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };

    let common = good.iter().map(|r| r.sup_diffs.len()).min().unwrap_or(0);
    let mean_stage_diffs: Vec<f64> = (1..common)
        .map(|s| good.iter().map(|r| r.sup_diffs[s]).sum::<f64>() / good.len() as f64)
        .collect();
    let decay = geometric_decay_fit(&mean_stage_diffs).ok();

    Ok(EnsembleSummary {
        records,
        moments,
        mean_stage_diffs,
        decay,
        failures,
    })
}

/// Sample mean of `‖u‖∞^p` and its standard error (sample standard
/// deviation with `n − 1`, divided by `√n`).
pub fn estimate_sup_moment(sup_norms: &[f64], p: f64) -> Result<(f64, f64)> {
    let n = sup_norms.len();
    if n < 2 {
        return Err(Error::InsufficientRecords { needed: 2, got: n });
    }
    let powered: Vec<f64> = sup_norms.iter().map(|s| s.abs().powf(p)).collect();
    let mean = powered.iter().sum::<f64>() / n as f64;
    let var = powered.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    Ok((mean, (var / n as f64).sqrt()))
}

/// `exp` of the least-squares slope of `ln(series)` against the index. The
/// series is cut at its first nonpositive entry.
pub fn geometric_decay_fit(series: &[f64]) -> Result<DecayFit> {
    if series.len() < 3 {
        return Err(Error::InsufficientRecords {
            needed: 3,
            got: series.len(),
        });
    }
    let cut = series.iter().position(|v| !(*v > 0.0)).unwrap_or(series.len());
    if cut < 2 {
        return Err(Error::param("series", "fewer than two positive leading entries"));
    }
    let ys: Vec<f64> = series[..cut].iter().map(|v| v.ln()).collect();
    let m = ys.len() as f64;
    let xbar = (m - 1.0) / 2.0;
    let ybar = ys.iter().sum::<f64>() / m;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        let dx = i as f64 - xbar;
        sxy += dx * (y - ybar);
        sxx += dx * dx;
    }
    Ok(DecayFit {
        rate: (sxy / sxx).exp(),
        points: cut,
        truncated: cut < series.len(),
    })
}

/// Ratio of ensemble means `E‖u_{s+1} − u_s‖^p / E‖u_s − u_{s−1}‖^p` over
/// successful replicates, with a delta-method standard error. Stages are
/// 1-based, as in `u_s`.
pub fn stage_moment_ratio(records: &[ReplicateRecord], p: f64, stage: usize) -> Option<(f64, f64)> {
    if stage < 1 {
        return None;
    }
    let pairs: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.succeeded() && r.sup_diffs.len() > stage)
        .map(|r| (r.sup_diffs[stage - 1].powf(p), r.sup_diffs[stage].powf(p)))
        .collect();
    let n = pairs.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / nf;
    if mx == 0.0 {
        return None;
    }
    let ratio = my / mx;
    // Var(Ȳ/X̄) ≈ (Var Y − 2R Cov + R² Var X) / (n X̄²)
    let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
    for (x, y) in &pairs {
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
        cxy += (x - mx) * (y - my);
    }
    let d = nf - 1.0;
    let var = (vy / d - 2.0 * ratio * cxy / d + ratio * ratio * vx / d) / (nf * mx * mx);
    Some((ratio, var.max(0.0).sqrt()))
}
