//! Command-line orchestration: load a config, run experiment blocks, write
//! CSV tables and a JSON summary.
//!
//! Exit codes: `0` success, `1` a verification failed, `2` the config or
//! the requested computation was rejected.

pub mod config;
pub mod report;

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use mrp_core::operator::require_split;
use mrp_core::shift::Classification;
use mrp_core::sync::invariance_residual;
use mrp_core::{
    certify, coding_point, ergodic_average, measure_contraction_experiment, normalize_witness, search_witness,
    stability_experiment, sync_experiment, verify_bounds_exact, verify_bounds_f64, verify_split_horizon,
    weak_hyperbolicity_experiment, Direction, Error, HorizonSampling, HorizonStatus, MapSystem, NormalizeMode,
    OracleParams, StabilityParams, Start, StateTaggedMeasure, TestFunction, Verdict, Word,
};
use serde::Serialize;
use serde_json::{json, Value};

use config::{ConfigError, ExperimentConfig, InitialConfig, ModeConfig, PhiConfig};
use report::{OutputDir, ReportError};

#[derive(Debug, Parser)]
#[command(name = "mrp", version, about = "Experiments on Markovian random products of maps")]
pub struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (default: the config's `out`, else `out`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores). Reports do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Run the cylinder oracle in exact rational arithmetic.
    #[arg(long, global = true)]
    pub exact: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Stationary vector, inverse matrix and classification.
    Stationary,
    /// Certify the configured witness and check it over a finite horizon.
    SplitCheck,
    /// Search for the shortest certified witness.
    SplitSearch,
    /// Exhaustive cylinder-measure bounds for a normalized witness.
    Oracle,
    /// Markov operator iteration towards the stationary measure.
    Operator,
    /// Decay of image diameters along sampled words.
    Sync,
    /// Contraction of Lebesgue measure on coordinate projections.
    Contract,
    /// Fraction of sampled sequences with a tiny fibre.
    WeakHyp,
    /// Coding-map points and the invariance check.
    Coding,
    /// Birkhoff averages against the stationary measure.
    Ergodic,
    /// Every block above, in order.
    All,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Stationary => "stationary",
            Command::SplitCheck => "split-check",
            Command::SplitSearch => "split-search",
            Command::Oracle => "oracle",
            Command::Operator => "operator",
            Command::Sync => "sync",
            Command::Contract => "contract",
            Command::WeakHyp => "weak-hyp",
            Command::Coding => "coding",
            Command::Ergodic => "ergodic",
            Command::All => "all",
        }
    }

    const BLOCKS: [Command; 10] = [
        Command::Stationary,
        Command::SplitCheck,
        Command::SplitSearch,
        Command::Oracle,
        Command::Operator,
        Command::Sync,
        Command::Contract,
        Command::WeakHyp,
        Command::Coding,
        Command::Ergodic,
    ];
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("{block}: {source}")]
    Block { block: &'static str, source: Error },
    #[error("{block}: {message}")]
    Precondition { block: &'static str, message: String },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}

/// What a run produced.
#[derive(Debug)]
pub struct Outcome {
    pub out_dir: PathBuf,
    pub failures: Vec<String>,
    pub summary: Value,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            0
        } else {
            1
        }
    }
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    sys: MapSystem,
    seed: u64,
    exact: bool,
    out: OutputDir,
    failures: Vec<String>,
}

fn block_err(block: &'static str) -> impl Fn(Error) -> RunError {
    move |source| RunError::Block { block, source }
}

/// Errors that mean "this experiment does not apply to this system".
fn is_precondition(e: &RunError) -> bool {
    match e {
        RunError::Precondition { .. } => true,
        RunError::Block { source, .. } => matches!(
            source,
            Error::HypothesisViolated(_)
                | Error::NotPrimitive
                | Error::NotIrreducible
                | Error::NoRowPositiveState
                | Error::NotMonotoneSystem
                | Error::ConnectorNotFound(_)
        ),
        _ => false,
    }
}

/// Run one command with CLI overrides applied to the config.
pub fn execute(
    mut cfg: ExperimentConfig,
    command: Command,
    seed: Option<u64>,
    out: Option<PathBuf>,
    exact: bool,
) -> Result<Outcome, RunError> {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let out_dir = out.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    // The embedded config must not depend on where the reports went.
    cfg.out = None;
    let sys = cfg.system.build()?;
    let mut ctx =
        Ctx { cfg: &cfg, sys, seed: cfg.seed, exact, out: OutputDir::create(&out_dir)?, failures: Vec::new() };
    let mut results = BTreeMap::new();
    let blocks: Vec<Command> = if command == Command::All { Command::BLOCKS.to_vec() } else { vec![command] };
    for block in blocks {
        let value = match run_block(&mut ctx, block) {
            Ok(v) => v,
            Err(e) if command == Command::All && is_precondition(&e) => json!({ "skipped": e.to_string() }),
            Err(e) => return Err(e),
        };
        results.insert(block.name(), value);
    }
    let failures = ctx.failures.clone();
    let mut files: Vec<String> = ctx.out.written().to_vec();
    files.push("summary.json".into());
    let summary = json!({
        "tool": "mrp",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command.name(),
        "seed": cfg.seed,
        "oracle_arithmetic": if exact { "exact-rational" } else { "float" },
        "config": cfg,
        "results": results,
        "failures": failures,
        "files": files,
        "exit_code": if failures.is_empty() { 0 } else { 1 },
    });
    ctx.out.json("summary.json", &summary)?;
    Ok(Outcome { out_dir, failures, summary })
}

/// Parse-free entry point used by `main`: returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("mrp: cannot set up {n} threads: {e}");
            return 2;
        }
    }
    let Some(path) = cli.config.as_deref() else {
        eprintln!("mrp: --config PATH is required");
        return 2;
    };
    let result = ExperimentConfig::load(path)
        .map_err(RunError::from)
        .and_then(|cfg| execute(cfg, cli.command, cli.seed, cli.out.clone(), cli.exact));
    match result {
        Ok(outcome) => {
            for f in &outcome.failures {
                eprintln!("mrp: verification failed: {f}");
            }
            println!("mrp {}: reports in {}", cli.command.name(), outcome.out_dir.display());
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("mrp: {e}");
            e.exit_code()
        }
    }
}

fn run_block(ctx: &mut Ctx, block: Command) -> Result<Value, RunError> {
    match block {
        Command::Stationary => stationary(ctx),
        Command::SplitCheck => split_check(ctx),
        Command::SplitSearch => split_search(ctx),
        Command::Oracle => oracle(ctx),
        Command::Operator => operator(ctx),
        Command::Sync => sync(ctx),
        Command::Contract => contract(ctx),
        Command::WeakHyp => weak_hyp(ctx),
        Command::Coding => coding(ctx),
        Command::Ergodic => ergodic(ctx),
        Command::All => unreachable!("expanded by execute"),
    }
}

#[derive(Serialize)]
struct StationaryRow {
    state: usize,
    p: f64,
    p_exact: String,
}

#[derive(Serialize)]
struct InverseRow {
    i: usize,
    j: usize,
    q: f64,
    q_exact: String,
}

fn stationary(ctx: &mut Ctx) -> Result<Value, RunError> {
    let err = block_err("stationary");
    let shift = ctx.sys.exact_shift().map_err(&err)?;
    let float = ctx.sys.shift().map_err(&err)?;
    let k = shift.k();
    let p = shift.stationary().as_slice();
    let rows: Vec<StationaryRow> = (0..k)
        .map(|i| StationaryRow { state: i + 1, p: float.stationary().as_slice()[i], p_exact: p[i].to_string() })
        .collect();
    ctx.out.csv("stationary.csv", &rows)?;
    let inverse: Vec<InverseRow> = (0..k)
        .flat_map(|i| (0..k).map(move |j| (i, j)))
        .map(|(i, j)| InverseRow {
            i: i + 1,
            j: j + 1,
            q: *float.inverse().entry(i, j),
            q_exact: shift.inverse().entry(i, j).to_string(),
        })
        .collect();
    ctx.out.csv("inverse_matrix.csv", &inverse)?;
    Ok(json!({
        "k": k,
        "classification": float.classification(),
        "stationary": float.stationary().as_slice(),
        "stationary_exact": p.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
        "residual": float.stationary().residual(float.forward()),
        "row_positive_state": float.row_positive_state().map(|u| u + 1),
    }))
}

#[derive(Serialize)]
struct HorizonRow {
    n: usize,
    prefixes: u64,
    enclosures_disjoint: u64,
    violations: u64,
}

fn split_check(ctx: &mut Ctx) -> Result<Value, RunError> {
    let err = block_err("split-check");
    let Some((a, b)) = ctx.cfg.split.words()? else {
        return Err(RunError::Precondition { block: "split-check", message: "needs split.a and split.b".into() });
    };
    let certificate = certify(&ctx.sys, &a, &b).map_err(&err)?;
    let split = &ctx.cfg.split;
    let sampling = if split.horizon_samples == 0 {
        HorizonSampling::Exhaustive
    } else {
        HorizonSampling::Random { count: split.horizon_samples, seed: ctx.seed }
    };
    let horizon = verify_split_horizon(&ctx.sys, &a, &b, split.horizon, sampling, split.cloud_size).map_err(&err)?;
    let rows: Vec<HorizonRow> = horizon
        .levels
        .iter()
        .map(|l| HorizonRow {
            n: l.n,
            prefixes: l.prefixes,
            enclosures_disjoint: l.enclosures_disjoint,
            violations: l.violations,
        })
        .collect();
    ctx.out.csv("split_horizon.csv", &rows)?;
    if horizon.status == HorizonStatus::Violated {
        let v = horizon.first_violation.as_ref().expect("violated reports carry a violation");
        ctx.failures.push(format!(
            "split-check: images of [{a}] and [{b}] overlap in coordinate {} after omega = [{}]",
            v.coordinate + 1,
            v.omega
        ));
    }
    Ok(json!({
        "a": a,
        "b": b,
        "witness": certificate,
        "horizon": {
            "n_max": horizon.n_max,
            "status": horizon.status,
            "prefixes_checked": horizon.prefixes_checked(),
            "first_violation": horizon.first_violation,
        },
    }))
}

fn split_search(ctx: &mut Ctx) -> Result<Value, RunError> {
    let max_len = ctx.cfg.split.max_len;
    match search_witness(&ctx.sys, max_len) {
        Ok(w) => Ok(json!({ "max_len": max_len, "witness": w })),
        Err(Error::NotMonotoneSystem) => {
            Ok(json!({ "max_len": max_len, "witness": null, "reason": Error::NotMonotoneSystem.to_string() }))
        }
        Err(e) => Err(RunError::Block { block: "split-search", source: e }),
    }
}

/// The configured witness, or the shortest one found by search.
fn witness_words(ctx: &Ctx, block: &'static str) -> Result<(Word, Word), RunError> {
    if let Some(words) = ctx.cfg.split.words()? {
        return Ok(words);
    }
    match search_witness(&ctx.sys, ctx.cfg.split.max_len) {
        Ok(Some(w)) => Ok((w.word_a, w.word_b)),
        Ok(None) | Err(Error::NotMonotoneSystem) => Err(RunError::Precondition {
            block,
            message: format!("no witness configured and none found with words of length <= {}", ctx.cfg.split.max_len),
        }),
        Err(e) => Err(RunError::Block { block, source: e }),
    }
}

#[derive(Serialize)]
struct OracleRow {
    s: usize,
    ell: usize,
    x: f64,
    lhs: f64,
    rhs: f64,
    lhs_exact: Option<String>,
    rhs_exact: Option<String>,
    verdict: &'static str,
    injective: bool,
    measure_nondecreasing: bool,
    words_containing_x: u64,
}

#[derive(Serialize)]
struct GeometricRow {
    ell: usize,
    sigma: f64,
    bound: f64,
    sigma_exact: Option<String>,
    verdict: &'static str,
}

fn oracle(ctx: &mut Ctx) -> Result<Value, RunError> {
    let err = block_err("oracle");
    let (a, b) = witness_words(ctx, "oracle")?;
    let shift = ctx.sys.shift().map_err(&err)?;
    let mode = match ctx.cfg.split.mode {
        ModeConfig::Primitive => NormalizeMode::Primitive,
        ModeConfig::RowPositive => NormalizeMode::RowPositive,
        ModeConfig::Auto if shift.classification() == Classification::Primitive => NormalizeMode::Primitive,
        ModeConfig::Auto => NormalizeMode::RowPositive,
    };
    let pair = normalize_witness(&ctx.sys, &a, &b, mode).map_err(&err)?;
    let oc = &ctx.cfg.oracle;
    let coords: Vec<usize> = if oc.coordinates.is_empty() {
        (0..ctx.sys.dim()).collect()
    } else {
        oc.coordinates
            .iter()
            .map(|&s| {
                if s == 0 || s > ctx.sys.dim() {
                    Err(ConfigError::Invalid(format!("oracle coordinate {s} is outside 1..={}", ctx.sys.dim())))
                } else {
                    Ok(s - 1)
                }
            })
            .collect::<Result<_, _>>()?
    };
    let mut rows = Vec::new();
    let mut geometric = Vec::new();
    let mut per_coordinate = Vec::new();
    let mut head = Value::Null;
    for (i, &s) in coords.iter().enumerate() {
        let params = OracleParams {
            s,
            ell_max: oc.ell_max,
            geometric_ell_max: if i == 0 { oc.geometric_ell_max } else { 0 },
            grid_points: oc.grid_points,
        };
        let run = if ctx.exact {
            verify_bounds_exact(&ctx.sys, &pair, &params)
        } else {
            verify_bounds_f64(&ctx.sys, &pair, &params)
        }
        .map_err(&err)?;
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for r in &run.reports {
            *counts.entry(r.verdict.as_str()).or_default() += 1;
            if r.verdict == Verdict::Fails || !r.injective || !r.measure_nondecreasing {
                ctx.failures.push(format!(
                    "oracle: s={} ell={} x={}: bound {}, injective {}, measure nondecreasing {}",
                    s + 1,
                    r.ell,
                    r.x,
                    r.verdict.as_str(),
                    r.injective,
                    r.measure_nondecreasing
                ));
            }
            rows.push(OracleRow {
                s: s + 1,
                ell: r.ell,
                x: r.x,
                lhs: r.lhs,
                rhs: r.rhs,
                lhs_exact: r.lhs_exact.clone(),
                rhs_exact: r.rhs_exact.clone(),
                verdict: r.verdict.as_str(),
                injective: r.injective,
                measure_nondecreasing: r.measure_nondecreasing,
                words_containing_x: r.words_containing_x,
            });
        }
        for g in &run.geometric {
            if g.verdict == Verdict::Fails {
                ctx.failures.push(format!("oracle: geometric bound fails at ell={}", g.ell));
            }
            geometric.push(GeometricRow {
                ell: g.ell,
                sigma: g.sigma,
                bound: g.bound,
                sigma_exact: g.sigma_exact.clone(),
                verdict: g.verdict.as_str(),
            });
        }
        per_coordinate.push(json!({ "s": s + 1, "verdicts": counts, "enumerated_words": run.enumerated_words }));
        if i == 0 {
            head = json!({
                "arithmetic": run.arithmetic,
                "w": run.w,
                "w_prime": run.w_prime,
                "measure_w": run.measure_w,
                "rho": run.rho,
                "rho0": run.rho0,
            });
        }
    }
    ctx.out.csv("oracle.csv", &rows)?;
    ctx.out.csv("oracle_geometric.csv", &geometric)?;
    let geometric_verdicts: Vec<&str> = geometric.iter().map(|g| g.verdict).collect();
    Ok(json!({
        "witness": { "a": a, "b": b },
        "pair": pair,
        "run": head,
        "coordinates": per_coordinate,
        "geometric_verdicts": geometric_verdicts,
    }))
}

fn point(numbers: &[config::Number], dim: usize, what: &str) -> Result<Vec<f64>, ConfigError> {
    if numbers.len() != dim {
        return Err(ConfigError::Invalid(format!("{what} has {} coordinates, expected {dim}", numbers.len())));
    }
    numbers.iter().map(|n| n.value()).collect()
}

fn initial_measures(ctx: &Ctx) -> Result<Vec<StateTaggedMeasure>, RunError> {
    let err = block_err("operator");
    let (k, dim, bx) = (ctx.sys.k(), ctx.sys.dim(), ctx.sys.ambient());
    if ctx.cfg.operator.initials.is_empty() {
        let p = ctx.sys.shift().map_err(&err)?.stationary().as_slice().to_vec();
        return Ok(vec![
            StateTaggedMeasure::dirac(k, 0, bx.lo().to_vec()).map_err(&err)?,
            StateTaggedMeasure::dirac(k, k - 1, bx.hi().to_vec()).map_err(&err)?,
            StateTaggedMeasure::from_cloud(&p, bx, 256).map_err(&err)?,
        ]);
    }
    ctx.cfg
        .operator
        .initials
        .iter()
        .enumerate()
        .map(|(i, init)| {
            let what = format!("operator initial {}", i + 1);
            let invalid = |e: Error| RunError::Config(ConfigError::Invalid(format!("{what}: {e}")));
            match init {
                InitialConfig::Dirac { state, point: x } => {
                    if *state == 0 {
                        return Err(ConfigError::Invalid(format!("{what}: states are 1-based")).into());
                    }
                    let x = point(x, dim, &what)?;
                    if !bx.contains_point(&x, 0.0) {
                        return Err(invalid(Error::OutsideDomain));
                    }
                    StateTaggedMeasure::dirac(k, state - 1, x).map_err(invalid)
                }
                InitialConfig::Cloud { masses, per_state } => {
                    let m = masses.iter().map(|n| n.value()).collect::<Result<Vec<_>, _>>()?;
                    if m.len() != k {
                        return Err(ConfigError::Invalid(format!("{what}: {} masses for {k} states", m.len())).into());
                    }
                    StateTaggedMeasure::from_cloud(&m, bx, *per_state).map_err(invalid)
                }
            }
        })
        .collect()
}

#[derive(Serialize)]
struct OperatorRow {
    step: usize,
    initial_id: usize,
    distance: f64,
    mass_gap: f64,
    mass_error: f64,
}

fn operator(ctx: &mut Ctx) -> Result<Value, RunError> {
    let err = block_err("operator");
    let initials = initial_measures(ctx)?;
    let oc = &ctx.cfg.operator;
    let params = StabilityParams {
        n_steps: oc.n_steps,
        particles: oc.particles,
        target_samples: oc.target_samples,
        target_depth: oc.target_depth,
        seed: ctx.seed,
    };
    let report = stability_experiment(&ctx.sys, &initials, &params).map_err(&err)?;
    let rows: Vec<OperatorRow> = report
        .rows
        .iter()
        .map(|r| OperatorRow {
            step: r.step,
            initial_id: r.initial_id + 1,
            distance: r.distance,
            mass_gap: r.mass_gap,
            mass_error: r.mass_error,
        })
        .collect();
    ctx.out.csv("operator.csv", &rows)?;
    let dim = ctx.sys.dim();
    let mut header = vec!["state".to_string()];
    header.extend((1..=dim).map(|s| format!("x{s}")));
    header.push("weight".into());
    let records: Vec<Vec<String>> = report
        .target
        .sorted()
        .particles()
        .iter()
        .map(|p| {
            let mut r = vec![(p.state + 1).to_string()];
            r.extend(p.point.iter().map(|x| x.to_string()));
            r.push(p.weight.to_string());
            r
        })
        .collect();
    ctx.out.csv_records("target_measure.csv", &header, &records)?;
    let max_mass_error = report.max_mass_error();
    if max_mass_error > 1e-12 {
        ctx.failures.push(format!("operator: section masses drift {max_mass_error:e} from pP^n"));
    }
    Ok(json!({
        "witness": { "a": report.witness.word_a, "b": report.witness.word_b },
        "initial_measures": initials.len(),
        "final_distances": report.final_distances(),
        "monte_carlo_floor": report.monte_carlo_floor,
        "max_mass_error": max_mass_error,
        "trend_holds": report.trend_holds(),
        "target_max_diameter": report.target_max_diameter,
    }))
}

#[derive(Serialize)]
struct CurveRow {
    trial: usize,
    n: usize,
    upper: f64,
    lower: f64,
}

#[derive(Serialize)]
struct RateRow {
    trial: usize,
    q_hat: f64,
    c_hat: f64,
    points: usize,
}

fn sync(ctx: &mut Ctx) -> Result<Value, RunError> {
    let sc = &ctx.cfg.sync;
    let report = sync_experiment(&ctx.sys, sc.trials, sc.n_max, sc.cloud_size, ctx.seed).map_err(block_err("sync"))?;
    let curves: Vec<CurveRow> = report
        .trials
        .iter()
        .flat_map(|t| {
            t.curve.n.iter().map(move |&n| CurveRow {
                trial: t.trial,
                n,
                upper: t.curve.upper[n],
                lower: t.curve.lower[n],
            })
        })
        .collect();
    ctx.out.csv("sync_curves.csv", &curves)?;
    let rates: Vec<RateRow> = report
        .trials
        .iter()
        .map(|t| RateRow { trial: t.trial, q_hat: t.fit.q, c_hat: t.fit.c, points: t.fit.points })
        .collect();
    ctx.out.csv("sync_rates.csv", &rates)?;
    let mean_q = rates.iter().map(|r| r.q_hat).sum::<f64>() / rates.len().max(1) as f64;
    Ok(json!({
        "row_positive_state": report.row_positive_state + 1,
        "trials": sc.trials,
        "max_q_hat": report.max_q,
        "mean_q_hat": mean_q,
        "fraction_contracting": report.fraction_contracting,
        "affine_l1_norm_bound": ctx.sys.max_affine_l1_norm(),
    }))
}

#[derive(Serialize)]
struct LengthRow {
    trial: usize,
    s: usize,
    n: usize,
    length: f64,
}

#[derive(Serialize)]
struct ContractRateRow {
    trial: usize,
    s: usize,
    q_hat: f64,
    c_hat: f64,
}

fn contract(ctx: &mut Ctx) -> Result<Value, RunError> {
    let cc = &ctx.cfg.contract;
    let rows =
        measure_contraction_experiment(&ctx.sys, cc.trials, cc.n_max, ctx.seed).map_err(block_err("contract"))?;
    let lengths: Vec<LengthRow> = rows
        .iter()
        .flat_map(|r| {
            r.lengths.iter().enumerate().map(move |(n, &length)| LengthRow {
                trial: r.trial,
                s: r.coordinate + 1,
                n,
                length,
            })
        })
        .collect();
    ctx.out.csv("contract.csv", &lengths)?;
    let rates: Vec<ContractRateRow> = rows
        .iter()
        .map(|r| ContractRateRow { trial: r.trial, s: r.coordinate + 1, q_hat: r.fit.q, c_hat: r.fit.c })
        .collect();
    ctx.out.csv("contract_rates.csv", &rates)?;
    let max_q: Vec<f64> = (0..ctx.sys.dim())
        .map(|s| rows.iter().filter(|r| r.coordinate == s).map(|r| r.fit.q).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    Ok(json!({ "trials": cc.trials, "n_max": cc.n_max, "max_q_hat_per_coordinate": max_q }))
}

fn weak_hyp(ctx: &mut Ctx) -> Result<Value, RunError> {
    let wc = &ctx.cfg.weak_hyp;
    let tol = wc.tol.value()?;
    let report =
        weak_hyperbolicity_experiment(&ctx.sys, wc.trials, wc.depth, tol, ctx.seed).map_err(block_err("weak-hyp"))?;
    Ok(serde_json::to_value(report).expect("plain data serializes"))
}

fn coding(ctx: &mut Ctx) -> Result<Value, RunError> {
    let err = block_err("coding");
    let cc = &ctx.cfg.coding;
    let k = ctx.sys.k();
    let patterns: Vec<String> = if cc.patterns.is_empty() {
        let mut p: Vec<String> = (1..=k).map(|s| s.to_string()).collect();
        if k >= 2 {
            p.push("1,2".into());
        }
        p
    } else {
        cc.patterns.clone()
    };
    let dim = ctx.sys.dim();
    let mut header = vec!["pattern".to_string(), "depth".to_string()];
    header.extend((1..=dim).map(|s| format!("x{s}")));
    header.push("bound".into());
    let mut records = Vec::new();
    let mut points = Vec::new();
    for pattern in &patterns {
        let base: Word =
            pattern.parse().map_err(|e| ConfigError::Invalid(format!("coding pattern {pattern:?}: {e}")))?;
        if base.is_empty() {
            return Err(ConfigError::Invalid("coding patterns must be nonempty".into()).into());
        }
        let word = Word(base.symbols().iter().copied().cycle().take(cc.depth).collect());
        let cp = coding_point(&ctx.sys, &word, None).map_err(&err)?;
        let mut r = vec![pattern.clone(), cc.depth.to_string()];
        r.extend(cp.point.iter().map(|x| x.to_string()));
        r.push(cp.bound.to_string());
        records.push(r);
        points.push(json!({ "pattern": pattern, "point": cp.point, "bound": cp.bound }));
    }
    ctx.out.csv_records("coding.csv", &header, &records)?;
    let shift = ctx.sys.shift().map_err(&err)?;
    let mut failures = 0usize;
    let mut max_residual = 0.0f64;
    for i in 0..cc.invariance_samples {
        let w = shift.sample_word_seeded(
            cc.invariance_depth + 1,
            Start::Stationary,
            Direction::Inverse,
            ctx.seed.wrapping_add(i as u64),
        );
        let check = invariance_residual(&ctx.sys, &w).map_err(&err)?;
        max_residual = max_residual.max(check.residual);
        if !check.holds {
            failures += 1;
        }
    }
    if failures > 0 {
        ctx.failures.push(format!("coding: invariance residual exceeds its bound on {failures} samples"));
    }
    Ok(json!({
        "depth": cc.depth,
        "points": points,
        "invariance": { "samples": cc.invariance_samples, "depth": cc.invariance_depth, "failures": failures, "max_residual": max_residual },
    }))
}

fn ergodic(ctx: &mut Ctx) -> Result<Value, RunError> {
    let err = block_err("ergodic");
    let ec = &ctx.cfg.ergodic;
    let dim = ctx.sys.dim();
    let starts: Vec<Vec<f64>> = if ec.starts.is_empty() {
        vec![ctx.sys.ambient().lo().to_vec(), ctx.sys.ambient().hi().to_vec()]
    } else {
        ec.starts
            .iter()
            .enumerate()
            .map(|(i, s)| point(s, dim, &format!("ergodic start {}", i + 1)))
            .collect::<Result<_, _>>()?
    };
    let one_based = |s: usize| {
        if s == 0 || s > dim {
            Err(ConfigError::Invalid(format!("ergodic coordinate {s} is outside 1..={dim}")))
        } else {
            Ok(s - 1)
        }
    };
    let phi = match ec.phi {
        PhiConfig::Coordinate { s } => TestFunction::Coordinate { s: one_based(s)? },
        PhiConfig::CoordinateSquared { s } => TestFunction::CoordinateSquared { s: one_based(s)? },
        PhiConfig::Product { s, t } => TestFunction::Product { s: one_based(s)?, t: one_based(t)? },
    };
    require_split(&ctx.sys).map_err(&err)?;
    let mut runs = Vec::new();
    for x in &starts {
        let r = ergodic_average(&ctx.sys, x, phi, ec.n, ctx.seed, ec.reference_samples).map_err(&err)?;
        let sigma = (r.std_error.powi(2) + r.reference_std_error.powi(2)).sqrt();
        runs.push(json!({
            "start": x,
            "time_average": r.time_average,
            "std_error": r.std_error,
            "reference": r.reference,
            "reference_std_error": r.reference_std_error,
            "within_3_sigma": (r.time_average - r.reference).abs() <= 3.0 * sigma,
        }));
    }
    Ok(json!({ "phi": ec.phi, "n": ec.n, "runs": runs }))
}
