//! The subcommands. Each returns `Ok(())` after writing its artifacts, or an
//! error whose category selects the exit code.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use twowall::obstacle::{check_solution, solve_two_wall_from, CheckTolerances, ObstacleProblem, ResidualReport};
use twowall::picard::{contraction_condition, ConditionReport, ContractionInputs};
use twowall::{
    discrete_green, green_holder_constant, green_sup_l2, picard_solve, run_ensemble, sample_white_noise,
    stage_moment_ratio, Drift, EnsembleConfig, Grid, SolutionTriplet, SpdeProblem,
};

use crate::config::ProblemSpec;
use crate::error::CliError;
use crate::output::{ensure_finite, Artifacts, Cell};
use crate::setup;

#[derive(Debug, Parser)]
#[command(name = "twowall", version, about = "Elliptic PDEs and SPDEs reflected between two walls")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Deterministic two-wall problem for a given field v.
    Solve(RunArgs),
    /// One Picard path of the reflected SPDE.
    Spde(RunArgs),
    /// Seeded Monte Carlo ensemble of Picard paths.
    Ensemble(EnsembleArgs),
    /// Evaluate the contraction condition term by term.
    CheckCondition(ConditionArgs),
    /// Dump the discrete Green kernel with C_D and B̂.
    Green(GreenArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Problem file (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `out.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Interior nodes per axis.
    #[arg(long)]
    pub n: Option<usize>,
    /// Residual tolerance of the obstacle solves.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub epsilon0: Option<f64>,
    #[arg(long)]
    pub stages: Option<usize>,
    /// Maximum Picard stages.
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Worker threads; 0 uses all cores. Does not change any output.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ConditionArgs {
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub a: f64,
    #[arg(long)]
    pub cp: f64,
    #[arg(long = "B")]
    pub b: f64,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub rd: f64,
    #[arg(long)]
    pub cd: f64,
    #[arg(long)]
    pub csigma: f64,
    /// Print a JSON object instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct GreenArgs {
    /// Take `dim` and `n` from a problem file.
    #[arg(long, conflicts_with_all = ["dim", "n"])]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    #[arg(long, default_value_t = 99)]
    pub n: usize,
    /// Hölder exponent for B̂; defaults to 1 in 1D and 1/2 in 2D.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Only report C_D and B̂.
    #[arg(long)]
    pub no_kernel: bool,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(args) => solve(&load(&args)?),
        Command::Spde(args) => spde(&load(&args)?),
        Command::Ensemble(args) => {
            let mut spec = load(&args.run)?;
            if let Some(r) = args.replicates {
                spec.ensemble.replicates = r;
            }
            if let Some(w) = args.workers {
                spec.ensemble.workers = w;
            }
            ensemble(&spec)
        }
        Command::CheckCondition(args) => check_condition(&args),
        Command::Green(args) => green(&args),
    }
}

fn load(args: &RunArgs) -> Result<ProblemSpec, CliError> {
    let mut spec = ProblemSpec::load(&args.config)?;
    if let Some(out) = &args.out {
        spec.out.dir = out.clone();
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    if let Some(n) = args.n {
        spec.n = n;
    }
    if let Some(t) = args.tol {
        spec.tol = t;
    }
    if let Some(e) = args.epsilon0 {
        spec.penalty.epsilon0 = e;
    }
    if let Some(s) = args.stages {
        spec.penalty.stages = s;
    }
    if let Some(m) = args.max_iter {
        spec.picard.max_iter = m;
    }
    Ok(spec)
}

/// Grid coordinates of node `i` as CSV cells.
fn coords(grid: &Grid, i: usize) -> Vec<Cell> {
    grid.point(i).as_slice().iter().map(|&c| Cell::Num(c)).collect()
}

/// `i, x_i[, y_i], u, eta, xi, residual`; the residual is the per-node
/// defect of the discrete identity `r_i · cell_volume = η_i − ξ_i`.
fn write_solution(
    art: &Artifacts,
    grid: &Grid,
    drift: &Drift,
    triplet: &SolutionTriplet,
) -> Result<(), CliError> {
    let lap = twowall::laplacian_apply(grid, &triplet.z)?;
    let cv = grid.cell_volume();
    let header: &[&str] = if grid.dim() == 1 {
        &["i", "x_i", "u", "eta", "xi", "residual"]
    } else {
        &["i", "x_i", "y_i", "u", "eta", "xi", "residual"]
    };
    let (eta, xi) = (triplet.measures.eta(), triplet.measures.xi());
    let rows = (0..grid.len()).map(|i| {
        let u = triplet.u[i];
        let r = lap[i] + drift.value(grid.point(i).as_slice(), u);
        let mut row = vec![Cell::from(i)];
        row.extend(coords(grid, i));
        row.extend([
            Cell::from(u),
            Cell::from(eta[i]),
            Cell::from(xi[i]),
            Cell::from(r * cv - (eta[i] - xi[i])),
        ]);
        row
    });
    art.write_csv("solution.csv", header, rows)?;
    Ok(())
}

fn residuals_json(r: &ResidualReport) -> Result<Value, CliError> {
    let values = [
        r.wall_violation,
        r.lower_complementarity,
        r.upper_complementarity,
        r.identity_residual,
        r.off_contact_mass,
        r.eta_mass,
        r.xi_mass,
    ];
    ensure_finite("diagnostics.json", "residuals", &values)?;
    Ok(json!({
        "wall_violation": r.wall_violation,
        "lower_complementarity": r.lower_complementarity,
        "upper_complementarity": r.upper_complementarity,
        "identity_residual": r.identity_residual,
        "off_contact_mass": r.off_contact_mass,
        "eta_mass": r.eta_mass,
        "xi_mass": r.xi_mass,
    }))
}

fn condition_json(report: &ConditionReport) -> Value {
    let i = &report.inputs;
    json!({
        "lhs": report.lhs,
        "satisfied": report.satisfied,
        "holder_term": report.holder_term,
        "sup_term": report.sup_term,
        "sigma_factor": report.sigma_factor,
        "inputs": {
            "p": i.p, "a": i.a, "c_p": i.c_p, "B": i.b, "lambda": i.lambda,
            "r_D": i.r_d, "C_D": i.c_d, "C_sigma": i.c_sigma, "k": i.k,
        },
    })
}

fn grid_json(grid: &Grid) -> Value {
    json!({
        "dim": grid.dim(),
        "n": grid.n(),
        "nodes": grid.len(),
        "spacing": grid.spacing(),
    })
}

pub fn solve(spec: &ProblemSpec) -> Result<(), CliError> {
    let grid = setup::grid(spec)?;
    let walls = setup::walls(spec, &grid)?;
    let drift = setup::drift(spec)?;
    let v = setup::field_v(spec, &grid)?;
    let problem = ObstacleProblem::new(&grid, &drift, &v, &walls)?;
    let staged = solve_two_wall_from(&problem, &setup::penalty(spec), spec.tol, None)?;
    let report = check_solution(&staged.triplet, &problem, &CheckTolerances::default());

    let art = Artifacts::create(&spec.out.dir, spec.config_hash(), None)?;
    write_solution(&art, &grid, &drift, &staged.triplet)?;
    let clauses: Vec<Value> = report
        .clauses
        .iter()
        .map(|c| json!({"clause": c.clause, "value": c.value, "tolerance": c.tolerance, "pass": c.pass, "node": c.node}))
        .collect();
    art.write_json(
        "diagnostics.json",
        json!({
            "command": "solve",
            "grid": grid_json(&grid),
            "epsilons": staged.epsilons,
            "residuals": residuals_json(&staged.triplet.report)?,
            "check": { "pass": report.pass, "clauses": clauses },
        }),
    )?;
    art.write_spec(&spec.echo())?;

    match report.clauses.iter().find(|c| !c.pass) {
        Some(c) => Err(CliError::CheckFailed {
            clause: c.clause,
            value: c.value,
            tolerance: c.tolerance,
        }),
        None => Ok(()),
    }
}

/// Condition inputs for a problem, or the reason the condition does not
/// apply (for instance `λ p ≤ k`).
fn problem_condition(
    spec: &ProblemSpec,
    grid: &Grid,
    kernel: &twowall::GreenKernel,
    c_sigma: f64,
) -> Result<(Option<ContractionInputs>, Option<String>), CliError> {
    match setup::condition_inputs(&spec.condition, grid, kernel, c_sigma) {
        Ok((inputs, _)) => Ok((Some(inputs), None)),
        Err(CliError::Core(e @ twowall::Error::InvalidParameter { .. })) => Ok((None, Some(e.to_string()))),
        Err(e) => Err(e),
    }
}

struct Constants {
    c_d: f64,
    b_hat: f64,
    lambda: f64,
}

fn kernel_constants(spec: &ProblemSpec, grid: &Grid, kernel: &twowall::GreenKernel) -> Result<Constants, CliError> {
    let lambda = spec.condition.lambda.unwrap_or(setup::default_lambda(grid.dim()));
    Ok(Constants {
        c_d: green_sup_l2(grid, kernel)?,
        b_hat: green_holder_constant(grid, kernel, lambda)?,
        lambda,
    })
}

fn constants_json(c: &Constants, cond: Option<&ConditionReport>, note: Option<&String>) -> Value {
    json!({
        "C_D": c.c_d,
        "B_hat": c.b_hat,
        "B_hat_lambda": c.lambda,
        "B_hat_is_lower_bound": true,
        "condition": cond.map(condition_json),
        "condition_note": note,
    })
}

pub fn spde(spec: &ProblemSpec) -> Result<(), CliError> {
    let grid = setup::grid(spec)?;
    let walls = setup::walls(spec, &grid)?;
    let coeff = setup::coefficients(spec)?;
    let kernel = discrete_green(&grid)?;
    let (inputs, note) = problem_condition(spec, &grid, &kernel, coeff.diffusion.lipschitz())?;
    let opts = setup::picard_options(spec, inputs);
    let out = picard_solve(&grid, &kernel, &coeff, &walls, spec.seed, &opts)?;
    let d = &out.diagnostics;

    let art = Artifacts::create(&spec.out.dir, spec.config_hash(), Some(spec.seed))?;
    write_solution(&art, &grid, &coeff.drift, &out.triplet)?;
    let noise = sample_white_noise(&grid, spec.seed);
    let header: &[&str] = if grid.dim() == 1 {
        &["j", "x_j", "dW"]
    } else {
        &["j", "x_j", "y_j", "dW"]
    };
    let rows = noise.increments().iter().enumerate().map(|(j, &dw)| {
        let mut row = vec![Cell::from(j)];
        row.extend(coords(&grid, j));
        row.push(Cell::from(dw));
        row
    });
    art.write_csv("noise.csv", header, rows)?;

    ensure_finite("diagnostics.json", "sup_diffs", &d.sup_diffs)?;
    ensure_finite("diagnostics.json", "v_diffs", &d.v_diffs)?;
    let constants = kernel_constants(spec, &grid, &kernel)?;
    let mut diag = json!({
        "command": "spde",
        "grid": grid_json(&grid),
        "iterations": d.iterations,
        "converged": d.converged,
        "sup_diffs": d.sup_diffs,
        "v_diffs": d.v_diffs,
        "outside_proven_regime": d.outside_proven_regime,
        "residuals": residuals_json(&out.triplet.report)?,
    });
    merge(&mut diag, constants_json(&constants, d.condition.as_ref(), note.as_ref()));
    art.write_json("diagnostics.json", diag)?;
    art.write_spec(&spec.echo())?;

    if !d.converged {
        return Err(CliError::PicardNotConverged {
            iterations: d.iterations,
            last: d.sup_diffs.last().copied().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}

fn merge(into: &mut Value, from: Value) {
    if let (Value::Object(a), Value::Object(b)) = (into, from) {
        a.extend(b);
    }
}

pub fn ensemble(spec: &ProblemSpec) -> Result<(), CliError> {
    let grid = setup::grid(spec)?;
    let walls = setup::walls(spec, &grid)?;
    let coeff = setup::coefficients(spec)?;
    let kernel = discrete_green(&grid)?;
    let (inputs, note) = problem_condition(spec, &grid, &kernel, coeff.diffusion.lipschitz())?;
    let condition = inputs.as_ref().map(contraction_condition).transpose()?;
    let constants = kernel_constants(spec, &grid, &kernel)?;
    let problem = SpdeProblem {
        grid,
        kernel,
        coeff,
        walls,
        options: setup::picard_options(spec, None),
    };
    let config = EnsembleConfig {
        replicates: spec.ensemble.replicates,
        base_seed: spec.seed,
        p_list: spec.ensemble.p.clone(),
        workers: spec.ensemble.workers,
    };
    let summary = run_ensemble(&problem, &config)?;

    let art = Artifacts::create(&spec.out.dir, spec.config_hash(), Some(spec.seed))?;
    let rows = summary.records.iter().map(|r| {
        vec![
            Cell::from(r.index),
            Cell::from(r.seed),
            Cell::from(r.sup_u),
            Cell::from(r.iterations),
            Cell::from(r.converged),
        ]
    });
    art.write_csv("ensemble.csv", &["r", "seed", "sup_u", "iterations", "converged"], rows)?;

    let moments: Vec<Value> = summary
        .moments
        .iter()
        .map(|m| json!({"p": m.p, "estimate": m.estimate, "standard_error": m.standard_error}))
        .collect();
    let longest = summary.records.iter().map(|r| r.sup_diffs.len()).max().unwrap_or(0);
    let mut ratios = Vec::new();
    for &p in &config.p_list {
        for stage in 2..longest {
            if let Some((ratio, se)) = stage_moment_ratio(&summary.records, p, stage) {
                ensure_finite("summary.json", "stage_ratios", &[ratio, se])?;
                ratios.push(json!({"p": p, "stage": stage, "ratio": ratio, "standard_error": se}));
            }
        }
    }
    ensure_finite("summary.json", "mean_stage_diffs", &summary.mean_stage_diffs)?;
    let failed: Vec<Value> = summary
        .records
        .iter()
        .filter(|r| !r.succeeded())
        .map(|r| json!({"r": r.index, "seed": r.seed, "error": r.error}))
        .collect();
    let mut doc = json!({
        "command": "ensemble",
        "grid": grid_json(&grid),
        "replicates": config.replicates,
        "failures": summary.failures,
        "failed": failed,
        "moments": moments,
        "mean_stage_diffs": summary.mean_stage_diffs,
        "decay": summary.decay.map(|d| json!({"rate": d.rate, "points": d.points, "truncated": d.truncated})),
        "stage_ratios": ratios,
    });
    merge(&mut doc, constants_json(&constants, condition.as_ref(), note.as_ref()));
    art.write_json("summary.json", doc)?;
    art.write_spec(&spec.echo())?;
    Ok(())
}

pub fn check_condition(args: &ConditionArgs) -> Result<(), CliError> {
    let inputs = ContractionInputs {
        p: args.p,
        a: args.a,
        c_p: args.cp,
        b: args.b,
        lambda: args.lambda,
        r_d: args.rd,
        c_d: args.cd,
        c_sigma: args.csigma,
        k: args.k,
    };
    let report = contraction_condition(&inputs)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&condition_json(&report)).expect("json value serializes"));
    } else {
        print!("{}", format_condition(&report));
    }
    Ok(())
}

/// Term-by-term decomposition of the left-hand side.
pub fn format_condition(r: &ConditionReport) -> String {
    let i = &r.inputs;
    let mut s = String::new();
    s.push_str(&format!(
        "holder term   2^(2p-1) a c_p B r_D^(lambda p - k) = {:.6}\n",
        r.holder_term
    ));
    s.push_str(&format!("sup term      2^(2p-1) c_p C_D^(p/2)             = {:.6}\n", r.sup_term));
    s.push_str(&format!(
        "sigma factor  C_sigma^p = {}^{}                  = {:.6}\n",
        i.c_sigma, i.p, r.sigma_factor
    ));
    s.push_str(&format!("lhs = {:.5}\n", r.lhs));
    s.push_str(if r.satisfied { "SATISFIED\n" } else { "NOT SATISFIED\n" });
    s
}

pub fn green(args: &GreenArgs) -> Result<(), CliError> {
    let (dim, n, hash_source) = match &args.config {
        Some(path) => {
            let spec = ProblemSpec::load(path)?;
            (spec.dim, spec.n, spec.echo())
        }
        None => (args.dim, args.n, format!("dim = {}\nn = {}\n", args.dim, args.n)),
    };
    let grid = Grid::new(dim, n)?;
    let kernel = discrete_green(&grid)?;
    let lambda = args.lambda.unwrap_or(setup::default_lambda(dim));
    let c_d = green_sup_l2(&grid, &kernel)?;
    let b_hat = green_holder_constant(&grid, &kernel, lambda)?;
    ensure_finite("diagnostics.json", "constants", &[c_d, b_hat])?;

    let hash = {
        use sha2::{Digest, Sha256};
        hex::encode(Sha256::digest(format!("{hash_source}lambda = {lambda}\n").as_bytes()))
    };
    let art = Artifacts::create(&args.out, hash, None)?;
    if !args.no_kernel {
        write_kernel(&art, &grid, &kernel)?;
    }
    art.write_json(
        "diagnostics.json",
        json!({
            "command": "green",
            "grid": grid_json(&grid),
            "C_D": c_d,
            "B_hat": b_hat,
            "B_hat_lambda": lambda,
            "B_hat_is_lower_bound": true,
        }),
    )?;
    println!("C_D = {c_d}");
    println!("B_hat(lambda = {lambda}) = {b_hat}");
    Ok(())
}

fn write_kernel(art: &Artifacts, grid: &Grid, kernel: &twowall::GreenKernel) -> Result<(), CliError> {
    let header: &[&str] = if grid.dim() == 1 {
        &["i", "j", "x_i", "y_j", "g"]
    } else {
        &["i", "j", "x_i_1", "x_i_2", "y_j_1", "y_j_2", "g"]
    };
    let n = grid.len();
    let rows = (0..n).flat_map(|i| {
        (0..n).map(move |j| {
            let mut row = vec![Cell::from(i), Cell::from(j)];
            row.extend(coords(grid, i));
            row.extend(coords(grid, j));
            row.push(Cell::from(kernel.get(i, j)));
            row
        })
    });
    art.write_csv("kernel.csv", header, rows)?;
    Ok(())
}

/// Reads one numeric column of an output CSV.
pub fn read_solution_column(path: &Path, column: &str) -> Result<Vec<f64>, CliError> {
    let bad = |message: String| CliError::FieldFile {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let k = reader
        .headers()
        .map_err(|e| bad(e.to_string()))?
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| bad(format!("no column {column}")))?;
    reader
        .records()
        .map(|r| {
            let r = r.map_err(|e| bad(e.to_string()))?;
            r.get(k)
                .unwrap_or("")
                .parse::<f64>()
                .map_err(|e| bad(e.to_string()))
        })
        .collect()
}
