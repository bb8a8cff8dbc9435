//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! cargo test --release --test acceptance

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qnet::channel::{
    error_rate_sensitivity, pairs_per_logical_transfer, plan_channel, LogicalTransferSpec, PlacementScheme,
    PlannerConfig,
};
use qnet::fidelity::{ballistic_fidelity, chained_teleport_fidelity, crossover_distance, link_fidelity};
use qnet::purification::{max_achievable_fidelity, oracle_purify, rounds_to_converge, BellDiagonalState, Protocol};
use qnet::simulator::{run, run_with, SimConfig};
use qnet::topology::{build_mesh, GridLayout, LqCapacity, MeshSpec};
use qnet::workloads::{placement_for, qft_pattern, InstructionStream, LogicalInstruction};
use qnet::{DistanceCells, ErrorRates, Fidelity, ParameterSet};

type Check = (&'static str, Duration, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> (Outcome, Duration, bool) {
    let start = Instant::now();
    let o = f();
    let took = start.elapsed();
    (o, took, took < limit)
}

fn params() -> ParameterSet {
    qnet::default_ion_trap()
}

fn crossover() -> Outcome {
    let d = crossover_distance(&params().times).map(|d| d.cells());
    match d {
        Ok(d) => outcome((590..=630).contains(&d), format!("{d} cells")),
        Err(e) => outcome(false, e.to_string()),
    }
}

fn ballistic_anchors() -> Outcome {
    let p = params().errors;
    let e100 = ballistic_fidelity(Fidelity::ONE, DistanceCells(100), &p).error();
    let closed = 1.0 - (1.0 - 1e-6f64).powi(100);
    let e2000 = ballistic_fidelity(Fidelity::ONE, DistanceCells(2000), &p).error();
    let pass = (e100 - 9.99950e-5).abs() <= 1e-9 && (closed - 9.99950e-5).abs() <= 1e-9 && e2000 > 1e-3;
    outcome(pass, format!("100 cells {e100:.6e} (closed form {closed:.6e}), 2000 cells {e2000:.4e}"))
}

fn headline_count() -> Outcome {
    let mut plan = match plan_channel(DistanceCells(600), PlacementScheme::EndpointsOnly, &params(), DistanceCells(600)) {
        Ok(p) => p,
        Err(e) => return outcome(false, e.to_string()),
    };
    plan.rounds_endpoint = 3;
    plan.endpoint_success = vec![1.0; 3];
    match pairs_per_logical_transfer(&plan, &LogicalTransferSpec::default()) {
        Ok(n) => outcome(n == 392.0, format!("{n} pairs")),
        Err(e) => outcome(false, e.to_string()),
    }
}

fn protocol_ordering() -> Outcome {
    let p = params().errors;
    let mut pass = true;
    let mut notes = Vec::new();
    for f in [0.6, 0.75, 0.9] {
        let d = rounds_to_converge(Fidelity::new(f), Protocol::Dejmps, &p, 0.1);
        let b = rounds_to_converge(Fidelity::new(f), Protocol::Bbpssw, &p, 0.1);
        match (d, b) {
            (Ok((rd, fd)), Ok((rb, fb))) => {
                let ratio = rb as f64 / rd as f64;
                pass &= fd.value() >= fb.value() && ratio >= 3.0;
                notes.push(format!("F0={f}: rounds {rb}/{rd} = {ratio:.1}x"));
            }
            _ => {
                pass = false;
                notes.push(format!("F0={f}: no convergence"));
            }
        }
    }
    outcome(pass, notes.join(", "))
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst_f = 0.0f64;
    let mut worst_p = 0.0f64;
    let instances = 1000;
    for _ in 0..instances {
        // Both closed forms require a strictly dominant Phi+ weight.
        let mut v: [f64; 4] = std::array::from_fn(|_| -rng.gen::<f64>().max(1e-300).ln());
        let top = (0..4).max_by(|&i, &j| v[i].total_cmp(&v[j])).unwrap();
        v.swap(0, top);
        v[0] += 1e-6 + rng.gen::<f64>();
        let sum: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= sum);
        let mut rate = || 10f64.powf(rng.gen_range(-9.0..-2.0));
        let errors = ErrorRates { p_1q: rate(), p_2q: rate(), p_mv: rate(), p_ms: rate() };
        let state = match BellDiagonalState::from_array(v) {
            Ok(s) => s,
            Err(e) => return outcome(false, e.to_string()),
        };
        for protocol in [Protocol::Dejmps, Protocol::Bbpssw] {
            let (fast, slow) = match (protocol.round(state, &errors), oracle_purify(v, v, protocol, &errors)) {
                (Ok(a), Ok(b)) => (a, b),
                (a, b) => return outcome(false, format!("{:?} / {:?}", a.err(), b.err())),
            };
            worst_f = worst_f.max((fast.state.fidelity().value() - slow.coefficients[0]).abs());
            worst_p = worst_p.max((fast.p_success - slow.p_success).abs());
        }
    }
    outcome(
        worst_f <= 1e-9 && worst_p <= 1e-9,
        format!("{instances} instances x 2 protocols, max |dF| {worst_f:.1e}, max |dp| {worst_p:.1e}"),
    )
}

fn rate_grid() -> Vec<f64> {
    let mut grid = Vec::new();
    for e in -9..-4 {
        for m in [1.0, 2.0, 5.0] {
            grid.push(m * 10f64.powi(e));
        }
    }
    grid.push(1e-4);
    grid
}

fn breakdown() -> Outcome {
    let grid = rate_grid();
    let f_min = params().threshold.f_min;
    let broken = grid.iter().copied().find(|&r| {
        max_achievable_fidelity(Protocol::Dejmps, &ErrorRates::uniform(r)).map(|f| f.value() < f_min).unwrap_or(true)
    });
    let Some(r_break) = broken else {
        return outcome(false, "no breakdown on the grid");
    };
    let mut pass = (1e-6..=1e-4).contains(&r_break);
    let mut notes = vec![format!("breakdown at {r_break:.0e}")];
    let working: Vec<f64> = grid.iter().copied().filter(|&r| r < r_break).collect();
    let reference = DistanceCells(16 * 600);
    for scheme in PlacementScheme::ALL {
        let rows = match error_rate_sensitivity(&params(), &working, scheme, reference, &PlannerConfig::default()) {
            Ok(r) => r,
            Err(e) => return outcome(false, e.to_string()),
        };
        if rows.iter().any(|r| r.breakdown()) {
            pass = false;
            notes.push(format!("{scheme}: infeasible inside the working regime"));
            continue;
        }
        let need: Vec<f64> = rows.iter().map(|r| r.plan.nonlocal_pairs).collect();
        let spread = need.iter().copied().fold(0.0, f64::max) / need.iter().copied().fold(f64::INFINITY, f64::min);
        pass &= spread <= 200.0;
        notes.push(format!("{scheme} {spread:.0}x"));
    }
    outcome(pass, notes.join(", "))
}

fn scheme_orderings() -> Outcome {
    let p = params();
    let mut violations = Vec::new();
    for h in 1..=64u64 {
        let d = DistanceCells(h * 600);
        let plans: Vec<_> = PlacementScheme::ALL
            .iter()
            .map(|&s| plan_channel(d, s, &p, DistanceCells(600)))
            .collect::<Result<_, _>>()
            .expect("plans");
        let eo = &plans[0];
        if plans.iter().any(|q| q.total_pairs < eo.total_pairs) {
            violations.push(format!("{h} hops: endpoints-only not minimal"));
        }
        if h >= 2 {
            let endpoint_max = plans[0].nonlocal_pairs.max(plans[1].nonlocal_pairs);
            let between_min = plans[2].nonlocal_pairs.min(plans[3].nonlocal_pairs);
            if between_min <= endpoint_max {
                violations.push(format!("{h} hops: between-teleport nonlocal not larger"));
            }
        }
    }
    let detail = if violations.is_empty() { "1..64 hops, 4 schemes".to_string() } else { violations.join("; ") };
    outcome(violations.is_empty(), detail)
}

fn chain_degradation() -> Outcome {
    let p = params();
    let link = link_fidelity(&p, DistanceCells(600));
    let one = chained_teleport_fidelity(Fidelity::ONE, 1, link, &p.errors).error();
    let many = chained_teleport_fidelity(Fidelity::ONE, 64, link, &p.errors).error();
    let ratio = many / one;
    outcome((50.0..=200.0).contains(&ratio), format!("64-hop / 1-hop error = {ratio:.1}x"))
}

// Hand-traced micro-scenarios. Every rate below is written out from the
// resource list of the flow: teleporter sets hold t/2 teleporters, link
// banks g generators, endpoint banks p purifiers; a resource shared by n
// live flows gives each 1/n of itself.

struct Hand {
    hop: f64,
    t_gen: f64,
    local: f64,
    tset: f64,
    gens: f64,
    purifiers: f64,
}

impl Hand {
    fn new(spec: &MeshSpec) -> Self {
        let t = params().times;
        Hand {
            hop: 2.0 * t.t_1q + t.t_2q + t.t_ms + 600.0 * t.t_cb,
            t_gen: t.t_gen,
            local: t.t_mv * spec.local_cells as f64,
            tset: spec.t as f64 / 2.0,
            gens: spec.g as f64,
            purifiers: spec.p as f64,
        }
    }

    fn classical(&self, hops: u64) -> f64 {
        let t = params().times;
        2.0 * t.t_1q + t.t_2q + t.t_ms + t.t_cb * (600 * hops) as f64
    }

    fn round(&self, hops: u64) -> f64 {
        let t = params().times;
        t.t_prfy + t.t_cb * (600 * hops) as f64
    }

    /// (raw pairs per logical transfer, endpoint rounds) from the planner.
    fn cost(&self, hops: u64) -> (f64, usize) {
        let plan = plan_channel(DistanceCells(600 * hops), PlacementScheme::EndpointsOnly, &params(), DistanceCells(600))
            .expect("feasible");
        assert_eq!(plan.wire_pairs, 1.0);
        (49.0 * plan.endpoint_pairs(), plan.rounds_endpoint)
    }

    /// Pipeline latency on a one-dimensional path.
    fn latency(&self, hops: u64) -> f64 {
        let (_, r) = self.cost(hops);
        self.t_gen + hops as f64 * self.hop + self.local + r as f64 * self.round(hops)
    }

    fn purifier_rate(&self, hops: u64, sharers: f64) -> f64 {
        if self.cost(hops).1 == 0 {
            f64::INFINITY
        } else {
            self.purifiers / (sharers * self.round(hops) / 2.0)
        }
    }
}

fn line(cols: usize) -> (GridLayout, MeshSpec) {
    let spec = MeshSpec { rows: 1, cols, ..MeshSpec::default() };
    (build_mesh(spec, &params()).expect("mesh"), spec)
}

fn ops(pairs: &[(u32, u32)], qubits: u32) -> InstructionStream {
    InstructionStream {
        qubits,
        ops: pairs.iter().enumerate().map(|(seq, &(a, b))| LogicalInstruction { seq, a, b }).collect(),
    }
}

/// Out-and-back over one hop on an idle 1x2 mesh.
fn scenario_single(h: &Hand) -> f64 {
    let (raw, _) = h.cost(1);
    let rate = (h.tset / h.hop).min(h.gens / (2.0 * h.t_gen)).min(h.purifier_rate(1, 1.0));
    2.0 * (raw / rate + h.latency(1) + h.classical(1))
}

/// Two hops from (0,0) to (2,0): router (1,0) sends both segments, link
/// (1,0)-(2,0) on the way out and (1,0)-(0,0) on the way back carry the
/// distributed pair. Then one hop (1,0)-(2,0) out and back.
fn scenario_return_home(h: &Hand) -> f64 {
    let (raw2, _) = h.cost(2);
    let rate2 = (h.tset / (2.0 * h.hop)).min(h.gens / h.t_gen).min(h.gens / (2.0 * h.t_gen)).min(h.purifier_rate(2, 1.0));
    let leg2 = raw2 / rate2 + h.latency(2) + h.classical(2);
    let (raw1, _) = h.cost(1);
    let rate1 = (h.tset / h.hop).min(h.gens / (2.0 * h.t_gen)).min(h.purifier_rate(1, 1.0));
    let leg1 = raw1 / rate1 + h.latency(1) + h.classical(1);
    2.0 * leg2 + 2.0 * leg1
}

/// 1x4 line, q2 visits q3 while q1 visits q4.
///   A  (1,0)->(2,0): T(1,0)=hop, L1=2g
///   B  (0,0)->(3,0): T(1,0)=2hop, T(2,0)=hop, L0=g, L1=2g, L2=g
///   R  (2,0)->(1,0): T(2,0)=hop, L1=2g
///   B' (3,0)->(0,0): T(2,0)=2hop, T(1,0)=hop, L0=g, L1=2g, L2=g
/// with g = t_gen. Phases: A+B, B, B+R, R, R+B', B'.
fn scenario_crossing(h: &Hand) -> Result<f64, String> {
    let (raw1, _) = h.cost(1);
    let (raw3, _) = h.cost(3);
    let (t, g, hop) = (h.tset, h.gens, h.hop);
    let tg = h.t_gen;
    let p1 = |n: f64| h.purifier_rate(1, n);
    let p3 = |n: f64| h.purifier_rate(3, n);
    let min = |xs: &[f64]| xs.iter().copied().fold(f64::INFINITY, f64::min);
    let check = |ok: bool, what: &str| if ok { Ok(()) } else { Err(format!("phase order assumption broken: {what}")) };

    let a1 = min(&[t / (2.0 * hop), g / (2.0 * 2.0 * tg), p1(1.0)]);
    let b1 = min(&[t / (2.0 * 2.0 * hop), t / hop, g / tg, g / (2.0 * 2.0 * tg), g / tg, p3(1.0)]);
    let t1 = raw1 / a1;
    let mut rem_b = raw3 - b1 * t1;
    check(rem_b > 0.0, "A drains first")?;

    let b2 = min(&[t / (2.0 * hop), t / hop, g / tg, g / (2.0 * tg), g / tg, p3(1.0)]);
    let s_r = t1 + h.latency(1) + h.classical(1);
    rem_b -= b2 * (s_r - t1);
    check(rem_b > 0.0, "return of A starts before B drains")?;

    let b3 = min(&[t / (2.0 * hop), t / (2.0 * hop), g / tg, g / (2.0 * 2.0 * tg), g / tg, p3(1.0)]);
    let r3 = min(&[t / (2.0 * hop), g / (2.0 * 2.0 * tg), p1(1.0)]);
    let t2 = s_r + rem_b / b3;
    let mut rem_r = raw1 - r3 * (t2 - s_r);
    check(rem_r > 0.0, "B drains before the return of A")?;

    let r4 = min(&[t / hop, g / (2.0 * tg), p1(1.0)]);
    let s_b = t2 + h.latency(3) + h.classical(3);
    rem_r -= r4 * (s_b - t2);
    check(rem_r > 0.0, "return of B starts before the return of A drains")?;

    let r5 = min(&[t / (2.0 * hop), g / (2.0 * 2.0 * tg), p1(1.0)]);
    let b5 = min(&[t / (2.0 * 2.0 * hop), t / hop, g / tg, g / (2.0 * 2.0 * tg), g / tg, p3(1.0)]);
    let t_r = s_b + rem_r / r5;
    let mut rem_b2 = raw3 - b5 * (t_r - s_b);
    check(rem_b2 > 0.0, "return of A drains before the return of B")?;

    let b6 = min(&[t / (2.0 * hop), t / hop, g / tg, g / (2.0 * tg), g / tg, p3(1.0)]);
    let t_b = t_r + rem_b2 / b6;
    rem_b2 = 0.0;
    let _ = rem_b2;

    let a_done = t_r + h.latency(1) + h.classical(1);
    let b_done = t_b + h.latency(3) + h.classical(3);
    Ok(a_done.max(b_done))
}

fn simulator_hand_traces() -> Outcome {
    let p = params();
    let mut notes = Vec::new();
    let mut pass = true;
    let mut compare = |name: &str, sim: Result<f64, String>, hand: Result<f64, String>| match (sim, hand) {
        (Ok(s), Ok(h)) => {
            let rel = (s - h).abs() / h;
            pass &= rel <= 1e-12;
            notes.push(format!("{name} {s:.3} vs {h:.3} (rel {rel:.0e})"));
        }
        (s, h) => {
            pass = false;
            notes.push(format!("{name}: {:?} / {:?}", s.err(), h.err()));
        }
    };

    let (layout, spec) = line(2);
    let sim = run(&ops(&[(1, 2)], 2), &layout, &p).map(|r| r.makespan).map_err(|e| e.to_string());
    compare("single hop", sim, Ok(scenario_single(&Hand::new(&spec))));

    let (layout, spec) = line(4);
    let sim = run(&ops(&[(2, 3), (1, 4)], 4), &layout, &p).map(|r| r.makespan).map_err(|e| e.to_string());
    compare("crossing", sim, scenario_crossing(&Hand::new(&spec)));

    let (layout, spec) = line(3);
    let sim = run(&ops(&[(1, 3), (2, 3)], 3), &layout, &p).map(|r| r.makespan).map_err(|e| e.to_string());
    compare("return home", sim, Ok(scenario_return_home(&Hand::new(&spec))));

    outcome(pass, notes.join("; "))
}

fn qft_makespan(capacity: LqCapacity, t: usize, g: usize, p: usize) -> Result<f64, String> {
    let params = params();
    let spec = MeshSpec { t, g, p, lq_capacity: capacity, ..MeshSpec::default() };
    let layout = build_mesh(spec, &params).map_err(|e| e.to_string())?;
    let stream = qft_pattern(256).map_err(|e| e.to_string())?;
    let placement = placement_for(256, &layout).map_err(|e| e.to_string())?;
    run_with(&stream, &placement, &layout, &params, &SimConfig::default())
        .map(|(r, _)| r.makespan)
        .map_err(|e| e.to_string())
}

fn contention() -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    let ladder = [2, 4, 8, 16, 32, 64, 128, 256, 512, 1024];

    for capacity in [LqCapacity::HomeBase, LqCapacity::Mobile] {
        let runs: Result<Vec<f64>, String> = ladder.iter().map(|&k| qft_makespan(capacity, k, k, k)).collect();
        match runs {
            Ok(m) => {
                let base = m[m.len() - 1];
                let norm: Vec<f64> = m.iter().map(|x| x / base).collect();
                let monotone = norm.windows(2).all(|w| w[1] <= w[0]);
                pass &= monotone;
                notes.push(format!(
                    "(a) {capacity} {} [{}]",
                    if monotone { "non-increasing" } else { "NOT monotone" },
                    norm.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>().join(" ")
                ));
            }
            Err(e) => {
                pass = false;
                notes.push(format!("(a) {capacity}: {e}"));
            }
        }
    }

    // Fixed budget B = t + g + p with t = g even: p = round(B / (2r + 1)),
    // t = largest even value with 2t + p <= B.
    for budget in [24usize, 48, 96] {
        let point = |r: usize| {
            let p = ((budget as f64 / (2 * r + 1) as f64).round() as usize).max(1);
            let t = (budget - p) / 4 * 2;
            (t, p)
        };
        let results: Result<Vec<(usize, usize, usize, f64)>, String> = [1, 2, 4]
            .iter()
            .map(|&r| {
                let (t, p) = point(r);
                qft_makespan(LqCapacity::HomeBase, t, t, p).map(|m| (r, t, p, m))
            })
            .collect();
        match results {
            Ok(rows) => {
                let base = rows[0].3;
                let worst = rows[1..].iter().map(|r| r.3 / base).fold(0.0, f64::max);
                pass &= worst <= 1.10;
                notes.push(format!(
                    "(b) B={budget} {}",
                    rows.iter().map(|(r, t, p, m)| format!("r{r} t=g={t} p={p} {:.3}", m / base)).collect::<Vec<_>>().join(", ")
                ));
            }
            Err(e) => {
                pass = false;
                notes.push(format!("(b) B={budget}: {e}"));
            }
        }
    }

    for t in [8, 16, 32] {
        match (qft_makespan(LqCapacity::Mobile, t, t, t / 4), qft_makespan(LqCapacity::Mobile, t, t, t / 8)) {
            (Ok(four), Ok(eight)) => {
                pass &= eight > four;
                notes.push(format!("(c) t=g={t}: 8p/4p = {:.3}", eight / four));
            }
            (a, b) => {
                pass = false;
                notes.push(format!("(c) t=g={t}: {:?} {:?}", a.err(), b.err()));
            }
        }
    }
    outcome(pass, notes.join("\n      "))
}

fn determinism() -> Outcome {
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return outcome(false, e.to_string()),
    };
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out_dir = dir.path().join(format!("run{k}"));
        let args = [
            "qnet", "--out", out_dir.to_str().unwrap(), "sweep", "--grid", "8x8", "--layout", "mobile",
            "--t", "2,4,8", "--couple-tg", "--p-ratio", "1,2", "--seed", "11", "--baseline", "64",
        ];
        let mut sink = Vec::new();
        let code = qnet::cli::run(args, &mut sink, &mut Vec::new());
        if code != 0 {
            return outcome(false, format!("sweep exited {code}"));
        }
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&out_dir)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        outputs.push(files);
    }
    let same = outputs[0] == outputs[1] && !outputs[0].is_empty();
    let bytes: usize = outputs[0].iter().map(|f| f.1.len()).sum();
    outcome(same, format!("{} file(s), {bytes} bytes, identical: {same}", outputs[0].len()))
}

fn main() {
    let ms = Duration::from_millis;
    let criteria: Vec<Check> = vec![
        ("crossover distance", ms(1), crossover),
        ("ballistic error anchors", ms(1), ballistic_anchors),
        ("headline resource count", ms(1), headline_count),
        ("purification protocol ordering", ms(1000), protocol_ordering),
        ("purification oracle equivalence", ms(30_000), oracle_equivalence),
        ("breakdown point", ms(10_000), breakdown),
        ("placement-scheme orderings", ms(10_000), scheme_orderings),
        ("chained-teleport degradation", ms(1), chain_degradation),
        ("simulator hand traces", ms(1000), simulator_hand_traces),
        ("contention reproduction", ms(600_000), contention),
        ("determinism", ms(600_000), determinism),
    ];
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.into_iter().enumerate() {
        let (o, took, in_time) = timed(limit, check);
        let pass = o.pass && in_time;
        if !pass {
            failed += 1;
        }
        let budget = if in_time { String::new() } else { format!(" over budget {limit:?}") };
        println!(
            "[{}] {:>2} {name}: {} ({took:.2?}{budget})",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
    }
    println!("acceptance: {} of 11 criteria passed", 11 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
