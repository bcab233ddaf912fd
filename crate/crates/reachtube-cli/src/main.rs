//! Command-line front end tying the pipeline together.
//!
//! - `verify`   — reach tube and verdict for the scenario's initial box
//! - `assess`   — fit the operational profile, verify every massive cell in
//!                parallel, and aggregate the failure probability
//! - `compare`  — interval-based vs point-based estimates at sample
//!                checkpoints
//! - `fit-op`   — fit the operational profile only, with convergence
//!                snapshots
//!
//! All inputs are loaded and validated before any computation starts, and
//! output files are written only after computation finishes, so an input
//! error (exit code 2) never leaves partial outputs behind.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use reachtube::closedloop::{check_safety, reach_trajectory, ReachTube, Verdict};
use reachtube::network::{Network, PropagationMode};
use reachtube::opmodel::{
    assess_reliability, convergence_curve, fit_op, OperationalProfile, Partitioning,
};
use reachtube::scenario::Scenario;
use reachtube::point_estimate;

const ROLLOUTS_PER_CELL: u32 = 20;

#[derive(Parser)]
#[command(
    name = "reachtube",
    version,
    about = "Reach-tube verification and operational-profile reliability assessment \
             for neural-network controlled discrete-time systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute the reach tube of the scenario's initial box and check it
    /// against the unsafe regions (exit 0 verified safe, 1 otherwise)
    Verify(RunArgs),
    /// Fit the operational profile from samples, verify every cell with
    /// mass, and aggregate the failure probability
    Assess(RunArgs),
    /// Run the interval-based and point-based estimators on the same profile
    /// across sample checkpoints
    Compare(RunArgs),
    /// Fit the operational profile only, with per-checkpoint snapshots
    FitOp(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (dynamics, boxes, horizon, options)
    #[arg(long)]
    scenario: PathBuf,
    /// Controller weight file
    #[arg(long)]
    network: Option<PathBuf>,
    /// Initial-state samples, CSV with one state per row
    #[arg(long)]
    samples: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Cells per dimension, e.g. "10" or "10,4"
    #[arg(long)]
    cells: Option<String>,
    /// Taylor-model truncation order override
    #[arg(long)]
    order: Option<u32>,
    /// Bernstein fit order override
    #[arg(long)]
    bernstein_order: Option<u32>,
    /// Bernstein error sampling steps override
    #[arg(long)]
    bernstein_steps: Option<u32>,
    /// Re-initialization period override (0 = never)
    #[arg(long)]
    reinit: Option<u32>,
    /// Observation noise radius override (applied to every state variable)
    #[arg(long)]
    noise: Option<f64>,
    /// Horizon override
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads for per-cell verification (default: available
    /// parallelism)
    #[arg(long)]
    jobs: Option<usize>,
    /// ReLU propagation mode
    #[arg(long, value_enum, default_value_t = BaselineMode::Optimized)]
    baseline_mode: BaselineMode,
    /// Verify zero-mass cells too
    #[arg(long)]
    all_cells: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineMode {
    Optimized,
    AlwaysBernstein,
}

impl From<BaselineMode> for PropagationMode {
    fn from(m: BaselineMode) -> Self {
        match m {
            BaselineMode::Optimized => PropagationMode::Optimized,
            BaselineMode::AlwaysBernstein => PropagationMode::AlwaysBernstein,
        }
    }
}

fn main() {
    let code = match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    };
    std::process::exit(code);
}

fn run() -> Result<i32> {
    match Cli::parse().command {
        Cmd::Verify(args) => cmd_verify(&args),
        Cmd::Assess(args) => cmd_assess(&args),
        Cmd::Compare(args) => cmd_compare(&args),
        Cmd::FitOp(args) => cmd_fit_op(&args),
    }
}

/// Scenario with command-line overrides applied (flags beat file values beat
/// defaults).
fn load_inputs(args: &RunArgs) -> Result<Scenario> {
    let mut scenario = Scenario::load(&args.scenario)
        .with_context(|| format!("scenario {}", args.scenario.display()))?;
    if let Some(order) = args.order {
        scenario.options.truncation_order = order;
    }
    if let Some(k) = args.bernstein_order {
        scenario.options.bernstein_order = k;
    }
    if let Some(m) = args.bernstein_steps {
        scenario.options.bernstein_steps = m;
    }
    if let Some(p) = args.reinit {
        scenario.options.reinit_period = p;
    }
    if let Some(r) = args.noise {
        if r < 0.0 {
            bail!("--noise must be non-negative");
        }
        scenario.options.noise_radius = vec![r; scenario.state_dim()];
    }
    if let Some(t) = args.steps {
        scenario.steps = t;
    }
    scenario.options.mode = args.baseline_mode.into();
    scenario.options.validate(scenario.state_dim())?;
    Ok(scenario)
}

fn load_network(args: &RunArgs, scenario: &Scenario) -> Result<Network> {
    let path = args
        .network
        .as_ref()
        .context("--network is required for this command")?;
    let net = Network::load(path).with_context(|| format!("network {}", path.display()))?;
    if net.input_dim() != scenario.state_dim() {
        bail!(
            "network input width {} does not match state dimension {}",
            net.input_dim(),
            scenario.state_dim()
        );
    }
    if net.output_dim() != scenario.dynamics.action_dim {
        bail!(
            "network output width {} does not match action dimension {}",
            net.output_dim(),
            scenario.dynamics.action_dim
        );
    }
    Ok(net)
}

fn load_samples(args: &RunArgs, dim: usize) -> Result<Vec<Vec<f64>>> {
    let path = args
        .samples
        .as_ref()
        .context("--samples is required for this command")?;
    let text =
        fs::read_to_string(path).with_context(|| format!("samples {}", path.display()))?;
    let mut samples = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .with_context(|| format!("samples line {}: {line:?}", lineno + 1))?;
        if row.len() != dim {
            bail!(
                "samples line {}: {} columns, expected {dim}",
                lineno + 1,
                row.len()
            );
        }
        samples.push(row);
    }
    if samples.is_empty() {
        bail!("samples file {} is empty", path.display());
    }
    Ok(samples)
}

fn parse_cells(args: &RunArgs, dim: usize) -> Result<Vec<usize>> {
    let spec = args.cells.as_deref().unwrap_or("10");
    let parts: Vec<usize> = spec
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("--cells {spec:?}"))?;
    let cells = match parts.len() {
        1 => vec![parts[0]; dim],
        n if n == dim => parts,
        n => bail!("--cells lists {n} dimensions, expected 1 or {dim}"),
    };
    Ok(cells)
}

/// Sample-count checkpoints: powers of two from 100 up to the sample count.
fn checkpoints(n: usize) -> Vec<usize> {
    let mut points = Vec::new();
    let mut c = 100.min(n);
    while c < n {
        points.push(c);
        c *= 2;
    }
    points.push(n);
    points.dedup();
    points
}

fn write_file(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn json_pretty<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

// -- verify ------------------------------------------------------------------

#[derive(Serialize)]
struct VerdictDoc<'a> {
    verdict: &'a Verdict,
    steps: usize,
    captured_at: Option<usize>,
    diverged_at: Option<usize>,
}

fn cmd_verify(args: &RunArgs) -> Result<i32> {
    let scenario = load_inputs(args)?;
    let net = load_network(args, &scenario)?;

    let tube = reach_trajectory(
        &net,
        &scenario.dynamics,
        &scenario.initial_box,
        scenario.steps,
        &scenario.options,
    )?;
    let verdict = check_safety(&tube, &scenario.safety);

    let mut csv = Vec::new();
    tube.write_csv(&mut csv)?;
    let doc = json_pretty(&VerdictDoc {
        verdict: &verdict,
        steps: scenario.steps,
        captured_at: tube.captured_at,
        diverged_at: tube.diverged_at,
    })?;

    fs::create_dir_all(&args.out)?;
    write_file(&args.out, "tube.csv", &csv)?;
    write_file(&args.out, "verdict.json", &doc)?;

    print_verdict(&verdict, &tube);
    Ok(if verdict.is_safe() { 0 } else { 1 })
}

fn print_verdict(verdict: &Verdict, tube: &ReachTube) {
    let kind = serde_json::to_value(verdict.kind).unwrap();
    match verdict.first_violation_step {
        Some(step) => println!("verdict: {} (first violation at step {step})", kind.as_str().unwrap()),
        None => println!("verdict: {}", kind.as_str().unwrap()),
    }
    if let Some(t) = tube.captured_at {
        println!("deadzone capture at step {t}");
    }
    if let Some(t) = tube.diverged_at {
        println!("tube diverged at step {t}");
    }
}

// -- assess ------------------------------------------------------------------

struct CellOutcomes {
    partitioning: Partitioning,
    profile: OperationalProfile,
    samples: Vec<Vec<f64>>,
    verdicts: Vec<Option<Verdict>>,
}

/// Fit the profile and verify each cell box in a work pool; verdicts come
/// back in cell-index order regardless of schedule.
fn verify_all_cells(args: &RunArgs, scenario: &Scenario, net: &Network) -> Result<CellOutcomes> {
    let cells_per_dim = parse_cells(args, scenario.state_dim())?;
    let partitioning = Partitioning::new(scenario.initial_box.clone(), cells_per_dim)?;
    let samples = load_samples(args, scenario.state_dim())?;
    let profile = fit_op(&samples, &partitioning)?;

    let jobs = args.jobs.unwrap_or_else(|| {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    });
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("building worker pool")?;
    let verdicts: Vec<Option<Verdict>> = pool.install(|| {
        partitioning
            .cells()
            .par_iter()
            .map(|cell| {
                if profile.mass[cell.index] == 0.0 && !args.all_cells {
                    return Ok(None);
                }
                let tube = reach_trajectory(
                    net,
                    &scenario.dynamics,
                    &cell.bounds,
                    scenario.steps,
                    &scenario.options,
                )?;
                Ok(Some(check_safety(&tube, &scenario.safety)))
            })
            .collect::<Result<_, reachtube::TmError>>()
    })?;
    Ok(CellOutcomes {
        partitioning,
        profile,
        samples,
        verdicts,
    })
}

fn cmd_assess(args: &RunArgs) -> Result<i32> {
    let scenario = load_inputs(args)?;
    let net = load_network(args, &scenario)?;
    let outcomes = verify_all_cells(args, &scenario, &net)?;

    let mut report = assess_reliability(&outcomes.profile, &outcomes.verdicts)?;
    let marks = checkpoints(outcomes.samples.len());
    let series = convergence_curve(
        &outcomes.samples,
        &outcomes.partitioning,
        &outcomes.verdicts,
        &marks,
    )?;
    report.convergence = Some(series.clone());

    let mut csv = String::from("n,estimate\n");
    for (n, est) in &series {
        csv.push_str(&format!("{n},{est}\n"));
    }
    let doc = json_pretty(&report)?;

    fs::create_dir_all(&args.out)?;
    write_file(&args.out, "report.json", &doc)?;
    write_file(&args.out, "convergence.csv", csv.as_bytes())?;

    println!(
        "failure probability {} over {} cells ({} verified, {} samples, {} out of bounds)",
        report.failure_probability,
        outcomes.partitioning.cell_count(),
        report.cells_verified,
        outcomes.profile.sample_count,
        outcomes.profile.out_of_bounds,
    );
    Ok(0)
}

// -- compare -----------------------------------------------------------------

fn cmd_compare(args: &RunArgs) -> Result<i32> {
    let scenario = load_inputs(args)?;
    let net = load_network(args, &scenario)?;
    let outcomes = verify_all_cells(args, &scenario, &net)?;

    let marks = checkpoints(outcomes.samples.len());
    let mut rows = Vec::new();
    for &n in &marks {
        let profile = fit_op(&outcomes.samples[..n], &outcomes.partitioning)?;
        let interval_est = assess_reliability(&profile, &outcomes.verdicts)?.failure_probability;
        let point_est = point_estimate(
            &net,
            &scenario.dynamics,
            &scenario.safety,
            &profile,
            scenario.steps,
            ROLLOUTS_PER_CELL,
            args.seed,
        );
        rows.push((n, interval_est, point_est));
    }

    let mut csv = String::from("n_samples,interval_estimate,point_estimate\n");
    for (n, interval_est, point_est) in &rows {
        csv.push_str(&format!("{n},{interval_est},{point_est}\n"));
    }

    fs::create_dir_all(&args.out)?;
    write_file(&args.out, "compare.csv", csv.as_bytes())?;

    for (n, interval_est, point_est) in &rows {
        println!("n={n}: interval {interval_est}, point {point_est}");
    }
    Ok(0)
}

// -- fit-op ------------------------------------------------------------------

fn cmd_fit_op(args: &RunArgs) -> Result<i32> {
    let scenario = load_inputs(args)?;
    let cells_per_dim = parse_cells(args, scenario.state_dim())?;
    let partitioning = Partitioning::new(scenario.initial_box.clone(), cells_per_dim)?;
    let samples = load_samples(args, scenario.state_dim())?;

    let profile = fit_op(&samples, &partitioning)?;
    let marks = checkpoints(samples.len());
    let mut csv = String::from("n,cell,mass\n");
    for &n in &marks {
        let snapshot = fit_op(&samples[..n], &partitioning)?;
        for (cell, mass) in snapshot.mass.iter().enumerate() {
            csv.push_str(&format!("{n},{cell},{mass}\n"));
        }
    }
    let doc = json_pretty(&profile)?;

    fs::create_dir_all(&args.out)?;
    write_file(&args.out, "profile.json", &doc)?;
    write_file(&args.out, "op_convergence.csv", csv.as_bytes())?;

    println!(
        "profile over {} cells from {} samples ({} out of bounds)",
        partitioning.cell_count(),
        profile.sample_count,
        profile.out_of_bounds
    );
    Ok(0)
}
