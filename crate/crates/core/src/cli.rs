//! Command-line front end. Every dataset command writes CSV with `#`
//! provenance lines (or JSON with `--json`) to standard output, or to
//! `<out>/<command>.csv` when `--out` is given.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::channel::{
    distance_sweep, error_rate_sensitivity, PlacementScheme, PlannerConfig, PLAN_CSV_HEADER,
};
use crate::fidelity::{
    ballistic_fidelity, ballistic_latency, chained_teleport_fidelity, crossover_distance, link_fidelity,
    teleport_fidelity, teleport_latency, DistanceCells, Fidelity,
};
use crate::params::{load_config, ErrorRates, ParameterSet};
use crate::purification::{expected_pairs, max_achievable_fidelity, trajectory, Protocol};
use crate::simulator::{run_with, write_trace_csv, SimConfig};
use crate::topology::{build_mesh, parse_grid, parse_layout, GridLayout, LqCapacity, MeshSpec};
use crate::workloads::{benchmark_stream, modexp_pattern, placement_for, Benchmark};

#[derive(Debug, Parser)]
#[command(name = "qnet", version, about = "Quantum interconnect models and contention simulator")]
pub struct Cli {
    /// Parameter file of `key = value` lines.
    #[arg(long, global = true)]
    pub params: Option<PathBuf>,
    /// Directory for dataset files; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Emit JSON instead of CSV.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ballistic vs teleport fidelity and latency over distance.
    Model {
        #[arg(long, default_value = "0:2000:100")]
        distances: String,
    },
    /// Purification trajectory of one protocol.
    Purify {
        #[arg(long, default_value = "dejmps")]
        protocol: Protocol,
        #[arg(long, default_value_t = 0.85)]
        start_fidelity: f64,
        #[arg(long, default_value_t = 8)]
        rounds: usize,
        /// Set all four error rates to this value.
        #[arg(long)]
        error_rate: Option<f64>,
    },
    /// Channel plans over a distance range.
    Plan {
        #[arg(long, default_value = "endpoints-only")]
        scheme: PlacementScheme,
        #[arg(long, default_value = "600:38400:600")]
        distances: String,
        #[arg(long, default_value = "dejmps")]
        protocol: Protocol,
        #[arg(long, default_value_t = 600)]
        hop_spacing: u64,
    },
    /// Teleported-pair need as all error rates vary together.
    Sensitivity {
        #[arg(long, default_value = "endpoints-only")]
        scheme: PlacementScheme,
        /// Comma-separated rates; a 1-2-5 grid over 1e-9..1e-4 by default.
        #[arg(long, value_delimiter = ',')]
        rates: Vec<f64>,
        #[arg(long, default_value_t = 16)]
        reference_hops: u64,
        #[arg(long, default_value = "dejmps")]
        protocol: Protocol,
    },
    /// Error growth along a chain of teleports.
    TeleportChain {
        #[arg(long, default_value_t = 64)]
        hops: u32,
        /// Fidelity of the qubit being forwarded.
        #[arg(long, default_value_t = 1.0)]
        start_fidelity: f64,
        #[arg(long, default_value_t = 600)]
        hop_spacing: u64,
    },
    /// One contention simulation; prints the JSON report.
    Simulate {
        #[command(flatten)]
        workload: WorkloadArgs,
        #[arg(long)]
        t: Option<usize>,
        #[arg(long)]
        g: Option<usize>,
        #[arg(long)]
        p: Option<usize>,
        /// Write an event trace CSV (needs --out).
        #[arg(long)]
        trace: bool,
    },
    /// Resource-allocation sweep normalized to a large baseline.
    Sweep {
        #[command(flatten)]
        workload: WorkloadArgs,
        #[arg(long, value_delimiter = ',', default_value = "2,4,8,16")]
        t: Vec<usize>,
        /// Generator counts; ignored with --couple-tg.
        #[arg(long, value_delimiter = ',')]
        g: Vec<usize>,
        /// Purifier counts; ignored when --p-ratio or --area is given.
        #[arg(long, value_delimiter = ',')]
        p: Vec<usize>,
        /// Set g equal to t.
        #[arg(long)]
        couple_tg: bool,
        /// Ratios r with t = r * p.
        #[arg(long, value_delimiter = ',')]
        p_ratio: Vec<usize>,
        /// Fixed area: t + g + p = AREA for each ratio (implies g = t).
        #[arg(long)]
        area: Option<usize>,
        #[arg(long, default_value_t = 1024)]
        baseline: usize,
    },
}

#[derive(Debug, Clone, Args)]
pub struct WorkloadArgs {
    #[arg(long, default_value = "qft")]
    pub benchmark: Benchmark,
    /// `home-base`, `mobile`, or a layout file.
    #[arg(long, default_value = "home-base")]
    pub layout: String,
    #[arg(long, default_value = "16x16")]
    pub grid: String,
    /// Logical qubits; one per site when absent.
    #[arg(long)]
    pub qubits: Option<u32>,
    /// Modular exponentiation steps.
    #[arg(long, default_value_t = 1)]
    pub steps: u32,
    #[arg(long, default_value = "endpoints-only")]
    pub scheme: PlacementScheme,
    /// Sample purification outcomes with this seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("{0}")]
    Failed(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Failed(_) | CliError::Io(_) => 1,
        }
    }
}

fn failed(e: impl std::fmt::Display) -> CliError {
    CliError::Failed(e.to_string())
}

/// Table with provenance, rendered as CSV or JSON.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Dataset {
    fn new(name: &str, columns: &str) -> Self {
        Self {
            name: name.to_string(),
            meta: Vec::new(),
            columns: columns.split(',').map(str::to_string).collect(),
            rows: Vec::new(),
        }
    }

    fn meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.to_string(), value.to_string()));
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|v| match v {
                    Value::String(s) => s.clone(),
                    Value::Null => String::new(),
                    other => other.to_string(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let meta: serde_json::Map<String, Value> =
            self.meta.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Object(self.columns.iter().cloned().zip(r.iter().cloned()).collect()))
            .collect();
        serde_json::to_string_pretty(&json!({ "dataset": self.name, "meta": meta, "rows": rows }))
            .expect("plain data")
    }
}

/// `lo:hi:step`, inclusive of `hi` when the step lands on it.
pub fn parse_range(text: &str) -> Result<Vec<u64>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    let nums: Result<Vec<u64>, _> = parts.iter().map(|p| p.trim().parse::<u64>()).collect();
    match nums.map_err(|e| CliError::Usage(format!("range `{text}`: {e}")))?.as_slice() {
        [lo, hi, step] if *step > 0 && lo <= hi => Ok((*lo..=*hi).step_by(*step as usize).collect()),
        [single] => Ok(vec![*single]),
        _ => Err(CliError::Usage(format!("range `{text}` must be lo:hi:step with step > 0 and lo <= hi"))),
    }
}

/// Default 1-2-5 log grid of error rates.
pub fn rate_grid(lo_exp: i32, hi_exp: i32) -> Vec<f64> {
    let mut grid = Vec::new();
    for e in lo_exp..hi_exp {
        for m in [1.0, 2.0, 5.0] {
            grid.push(format!("{m}e{e}").parse().expect("well-formed literal"));
        }
    }
    grid.push(format!("1e{hi_exp}").parse().expect("well-formed literal"));
    grid
}

fn params_meta(ds: &mut Dataset, params: &ParameterSet) {
    let text = params.to_string();
    let joined: Vec<&str> = text.lines().collect();
    ds.meta("params", joined.join("; "));
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

fn model(params: &ParameterSet, distances: &str) -> Result<Dataset, CliError> {
    let mut ds = Dataset::new(
        "model",
        "distance,ballistic_error,ballistic_latency_us,teleport_error,teleport_latency_us",
    );
    params_meta(&mut ds, params);
    match crossover_distance(&params.times) {
        Ok(d) => ds.meta("crossover_cells", d.cells()),
        Err(e) => ds.meta("crossover_cells", e),
    }
    for d in parse_range(distances)? {
        let d = DistanceCells(d);
        let moved = ballistic_fidelity(Fidelity::ONE, d, &params.errors);
        let sent = teleport_fidelity(Fidelity::ONE, link_fidelity(params, d), &params.errors);
        ds.rows.push(vec![
            json!(d.cells()),
            num(moved.error()),
            num(ballistic_latency(d, &params.times)),
            num(sent.error()),
            num(teleport_latency(d, &params.times)),
        ]);
    }
    Ok(ds)
}

fn purify(
    params: &ParameterSet,
    protocol: Protocol,
    start: f64,
    rounds: usize,
    rate: Option<f64>,
) -> Result<Dataset, CliError> {
    if !(0.25..=1.0).contains(&start) {
        return Err(CliError::Usage(format!("start fidelity {start} outside [0.25, 1]")));
    }
    let errors = rate.map(ErrorRates::uniform).unwrap_or(params.errors);
    let mut ds = Dataset::new(
        "purify",
        "protocol,round,fidelity,fidelity_error,success_probability,expected_pairs",
    );
    params_meta(&mut ds, params);
    ds.meta("protocol", protocol);
    ds.meta("start_fidelity", start);
    if let Some(r) = rate {
        ds.meta("uniform_error_rate", r);
    }
    let traj = trajectory(Fidelity::new(start), protocol, &errors, rounds).map_err(failed)?;
    ds.meta("fixpoint_error", max_achievable_fidelity(protocol, &errors).map_err(failed)?.error());
    let name = json!(protocol.to_string());
    ds.rows.push(vec![name.clone(), json!(0), num(start), num(traj.start.error()), num(1.0), num(1.0)]);
    let success = traj.success();
    for (i, (f, p)) in traj.rounds.iter().enumerate() {
        let pairs = expected_pairs(&success[..=i]);
        ds.rows.push(vec![name.clone(), json!(i + 1), num(f.value()), num(f.error()), num(*p), num(pairs)]);
    }
    Ok(ds)
}

fn plan(
    params: &ParameterSet,
    scheme: PlacementScheme,
    distances: &str,
    protocol: Protocol,
    hop_spacing: u64,
) -> Result<Dataset, CliError> {
    if hop_spacing == 0 {
        return Err(CliError::Usage("hop spacing must be at least 1".into()));
    }
    let config = PlannerConfig { hop_spacing: DistanceCells(hop_spacing), protocol, ..PlannerConfig::default() };
    let distances: Vec<DistanceCells> = parse_range(distances)?.into_iter().map(DistanceCells).collect();
    let plans: Vec<_> = distances
        .par_iter()
        .map(|&d| distance_sweep(scheme, params, &[d], &config).map(|mut v| v.remove(0)))
        .collect::<Result<_, _>>()
        .map_err(failed)?;
    let mut ds = Dataset::new("plan", PLAN_CSV_HEADER);
    params_meta(&mut ds, params);
    ds.meta("scheme", scheme);
    ds.meta("protocol", protocol);
    ds.meta("hop_spacing", hop_spacing);
    ds.meta("pairs", "per logical transfer of 49 physical qubits");
    let scale = 49.0;
    for p in &plans {
        ds.rows.push(vec![
            json!(p.distance.cells()),
            json!(p.hops),
            json!(p.scheme.to_string()),
            json!(p.is_feasible()),
            json!(p.infeasible.map(|s| s.to_string()).unwrap_or_default()),
            json!(p.rounds_wire),
            json!(p.rounds_between),
            json!(p.rounds_endpoint),
            num(p.total_pairs * scale),
            num(p.nonlocal_pairs * scale),
            num(p.setup_latency),
            num(p.distributed_fidelity.error()),
            num(p.delivered_fidelity.error()),
        ]);
    }
    Ok(ds)
}

fn first_infeasible(ds: &Dataset) -> Option<String> {
    let feasible = ds.columns.iter().position(|c| c == "feasible")?;
    let stage = ds.columns.iter().position(|c| c == "failing_stage");
    ds.rows.iter().find(|r| r[feasible] == json!(false)).map(|r| {
        let stage = stage.and_then(|i| r[i].as_str()).unwrap_or("endpoint");
        format!("{} = {} fails at the {stage} stage", ds.columns[0], r[0])
    })
}

fn sensitivity(
    params: &ParameterSet,
    scheme: PlacementScheme,
    rates: &[f64],
    reference_hops: u64,
    protocol: Protocol,
) -> Result<Dataset, CliError> {
    let grid = if rates.is_empty() { rate_grid(-9, -4) } else { rates.to_vec() };
    let config = PlannerConfig { protocol, ..PlannerConfig::default() };
    let reference = DistanceCells(reference_hops * config.hop_spacing.cells());
    let rows = error_rate_sensitivity(params, &grid, scheme, reference, &config).map_err(failed)?;
    let mut ds = Dataset::new(
        "sensitivity",
        "rate,fixpoint_error,feasible,rounds_wire,rounds_endpoint,nonlocal_pairs,total_pairs",
    );
    params_meta(&mut ds, params);
    ds.meta("scheme", scheme);
    ds.meta("reference_cells", reference.cells());
    ds.meta("pairs", "per logical transfer of 49 physical qubits; empty when broken down");
    for r in rows {
        let feasible = !r.breakdown();
        let pairs = |x: f64| if feasible { num(x * 49.0) } else { Value::Null };
        ds.rows.push(vec![
            num(r.rate),
            num(r.ceiling.error()),
            json!(feasible),
            json!(r.plan.rounds_wire),
            json!(r.plan.rounds_endpoint),
            pairs(r.plan.nonlocal_pairs),
            pairs(r.plan.total_pairs),
        ]);
    }
    Ok(ds)
}

fn teleport_chain(params: &ParameterSet, hops: u32, start: f64, spacing: u64) -> Result<Dataset, CliError> {
    if spacing == 0 {
        return Err(CliError::Usage("hop spacing must be at least 1".into()));
    }
    let link = link_fidelity(params, DistanceCells(spacing));
    if !(0.25..=1.0).contains(&start) {
        return Err(CliError::Usage(format!("start fidelity {start} outside [0.25, 1]")));
    }
    let f0 = Fidelity::new(start);
    let mut ds = Dataset::new("teleport-chain", "hops,error,relative_to_one_hop");
    params_meta(&mut ds, params);
    ds.meta("link_error", link.error());
    ds.meta("start_error", f0.error());
    let one = chained_teleport_fidelity(f0, 1, link, &params.errors).error();
    for h in 0..=hops {
        let e = chained_teleport_fidelity(f0, h, link, &params.errors).error();
        ds.rows.push(vec![json!(h), num(e), num(e / one)]);
    }
    Ok(ds)
}

fn base_layout(args: &WorkloadArgs, params: &ParameterSet) -> Result<MeshSpec, CliError> {
    match args.layout.parse::<LqCapacity>() {
        Ok(capacity) => {
            let (rows, cols) = parse_grid(&args.grid).map_err(CliError::Usage)?;
            Ok(MeshSpec { rows, cols, lq_capacity: capacity, ..MeshSpec::default() })
        }
        Err(_) => {
            let text = fs::read_to_string(&args.layout)
                .map_err(|e| CliError::Usage(format!("layout `{}`: {e}", args.layout)))?;
            Ok(parse_layout(&text, params).map_err(failed)?.spec)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub t: usize,
    pub g: usize,
    pub p: usize,
    pub makespan: f64,
}

/// Divides each makespan by the makespan of the `baseline` triple.
pub fn normalize_sweep(results: &[SweepPoint], baseline: (usize, usize, usize)) -> Result<Vec<f64>, CliError> {
    let base = results
        .iter()
        .find(|r| (r.t, r.g, r.p) == baseline)
        .ok_or_else(|| failed(format!("baseline t={} g={} p={} missing from results", baseline.0, baseline.1, baseline.2)))?;
    if base.makespan <= 0.0 {
        return Err(failed("baseline makespan is zero"));
    }
    Ok(results.iter().map(|r| r.makespan / base.makespan).collect())
}

fn workload_inputs(
    args: &WorkloadArgs,
    spec: MeshSpec,
    params: &ParameterSet,
) -> Result<(GridLayout, crate::workloads::InstructionStream, crate::workloads::Placement, SimConfig), CliError> {
    let layout = build_mesh(spec, params).map_err(|e| CliError::Usage(e.to_string()))?;
    let n = args.qubits.unwrap_or(layout.router_count() as u32);
    let stream = match args.benchmark {
        Benchmark::ModExp => modexp_pattern(n, args.steps),
        other => benchmark_stream(other, n),
    }
    .map_err(|e| CliError::Usage(e.to_string()))?;
    let placement = placement_for(n as usize, &layout).map_err(|e| CliError::Usage(e.to_string()))?;
    let config = SimConfig { scheme: args.scheme, seed: args.seed, ..SimConfig::default() };
    Ok((layout, stream, placement, config))
}

fn sim_error(e: crate::simulator::SimError) -> CliError {
    use crate::simulator::SimError;
    match e {
        SimError::Infeasible { .. } | SimError::DepthExceeded { .. } => CliError::Infeasible(e.to_string()),
        other => failed(other),
    }
}

fn sweep_points(
    t: &[usize],
    g: &[usize],
    p: &[usize],
    couple: bool,
    ratios: &[usize],
    area: Option<usize>,
) -> Result<Vec<(usize, usize, usize)>, CliError> {
    let mut points = Vec::new();
    if let Some(area) = area {
        let ratios = if ratios.is_empty() { vec![1, 2, 4, 8] } else { ratios.to_vec() };
        for r in ratios {
            let p = ((area as f64 / (2 * r + 1) as f64).round() as usize).max(1);
            let t = ((area.saturating_sub(p)) / 2 / 2 * 2).max(2);
            points.push((t, t, p));
        }
        return Ok(points);
    }
    let gs: Vec<Option<usize>> = if couple || g.is_empty() { vec![None] } else { g.iter().copied().map(Some).collect() };
    for &t in t {
        for &gv in &gs {
            let g = gv.unwrap_or(t);
            if !ratios.is_empty() {
                for &r in ratios {
                    if r > 0 && t % r == 0 {
                        points.push((t, g, t / r));
                    }
                }
            } else if p.is_empty() {
                points.push((t, g, t));
            } else {
                points.extend(p.iter().map(|&p| (t, g, p)));
            }
        }
    }
    if points.is_empty() {
        return Err(CliError::Usage("sweep grid is empty".into()));
    }
    if let Some(&(t, g, p)) = points.iter().find(|&&(t, g, p)| t % 2 == 1 || t == 0 || g == 0 || p == 0) {
        return Err(CliError::Usage(format!("t={t} g={g} p={p}: counts must be at least 1 and t even")));
    }
    Ok(points)
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    params: &ParameterSet,
    args: &WorkloadArgs,
    t: &[usize],
    g: &[usize],
    p: &[usize],
    couple: bool,
    ratios: &[usize],
    area: Option<usize>,
    baseline: usize,
) -> Result<Dataset, CliError> {
    let base_spec = base_layout(args, params)?;
    let mut points = sweep_points(t, g, p, couple, ratios, area)?;
    let base = (baseline, baseline, baseline);
    if !points.contains(&base) {
        points.push(base);
    }
    let results: Vec<SweepPoint> = points
        .par_iter()
        .map(|&(t, g, p)| {
            let spec = MeshSpec { t, g, p, ..base_spec };
            let (layout, stream, placement, config) = workload_inputs(args, spec, params)?;
            let (report, _) = run_with(&stream, &placement, &layout, params, &config).map_err(sim_error)?;
            Ok(SweepPoint { t, g, p, makespan: report.makespan })
        })
        .collect::<Result<_, CliError>>()?;
    let normalized = normalize_sweep(&results, base)?;

    let mut ds = Dataset::new("sweep", "t,g,p,makespan_us,normalized");
    params_meta(&mut ds, params);
    ds.meta("benchmark", args.benchmark);
    ds.meta("layout", base_spec.lq_capacity);
    ds.meta("grid", format!("{}x{}", base_spec.rows, base_spec.cols));
    ds.meta("qubits", args.qubits.map(|q| q.to_string()).unwrap_or_else(|| "one per site".into()));
    ds.meta("scheme", args.scheme);
    ds.meta("baseline", format!("t=g=p={baseline}"));
    if let Some(a) = area {
        ds.meta("area", a);
    }
    if let Some(s) = args.seed {
        ds.meta("seed", s);
    }
    for (r, n) in results.iter().zip(normalized) {
        ds.rows.push(vec![json!(r.t), json!(r.g), json!(r.p), num(r.makespan), num(n)]);
    }
    Ok(ds)
}

fn emit(out: &mut dyn Write, dir: Option<&Path>, name: &str, ext: &str, text: &str) -> Result<(), CliError> {
    match dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let path = dir.join(format!("{name}.{ext}"));
            fs::write(&path, text)?;
            writeln!(out, "wrote {}", path.display())?;
        }
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn emit_dataset(cli: &Cli, out: &mut dyn Write, ds: &Dataset) -> Result<(), CliError> {
    if cli.json {
        emit(out, cli.out.as_deref(), &ds.name, "json", &ds.to_json())
    } else {
        emit(out, cli.out.as_deref(), &ds.name, "csv", &ds.to_csv())
    }
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let params = match &cli.params {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            load_config(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => ParameterSet::default(),
    };
    let ds = match &cli.command {
        Command::Model { distances } => model(&params, distances)?,
        Command::Purify { protocol, start_fidelity, rounds, error_rate } => {
            purify(&params, *protocol, *start_fidelity, *rounds, *error_rate)?
        }
        Command::Plan { scheme, distances, protocol, hop_spacing } => {
            let ds = plan(&params, *scheme, distances, *protocol, *hop_spacing)?;
            emit_dataset(cli, out, &ds)?;
            return match first_infeasible(&ds) {
                Some(msg) => Err(CliError::Infeasible(msg)),
                None => Ok(()),
            };
        }
        Command::Sensitivity { scheme, rates, reference_hops, protocol } => {
            sensitivity(&params, *scheme, rates, *reference_hops, *protocol)?
        }
        Command::TeleportChain { hops, start_fidelity, hop_spacing } => {
            teleport_chain(&params, *hops, *start_fidelity, *hop_spacing)?
        }
        Command::Simulate { workload, t, g, p, trace } => {
            let base = base_layout(workload, &params)?;
            let spec = MeshSpec { t: t.unwrap_or(base.t), g: g.unwrap_or(base.g), p: p.unwrap_or(base.p), ..base };
            let (layout, stream, placement, mut config) = workload_inputs(workload, spec, &params)?;
            config.trace = *trace;
            let (report, rows) = run_with(&stream, &placement, &layout, &params, &config).map_err(sim_error)?;
            emit(out, cli.out.as_deref(), "simulate", "json", &(report.to_json() + "\n"))?;
            if *trace {
                let mut csv = Vec::new();
                write_trace_csv(&mut csv, &rows)?;
                let text = String::from_utf8(csv).expect("ascii trace");
                match cli.out.as_deref() {
                    Some(dir) => emit(out, Some(dir), "trace", "csv", &text)?,
                    None => return Err(CliError::Usage("--trace needs --out".into())),
                }
            }
            return Ok(());
        }
        Command::Sweep { workload, t, g, p, couple_tg, p_ratio, area, baseline } => {
            sweep(&params, workload, t, g, p, *couple_tg, p_ratio, *area, *baseline)?
        }
    };
    emit_dataset(cli, out, &ds)
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code; diagnostics go to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = write!(err, "{}", e.render());
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "qnet: {e}");
            e.exit_code()
        }
    }
}
