//! Event-driven contention simulator for logical instruction streams.
//!
//! Each logical transfer opens a channel: a stream of raw EPR pairs from
//! the path's midpoint generator, teleported router to router and purified
//! at both endpoint sites until enough purified pairs exist for every
//! physical qubit. Streams are simulated as flows. A flow holds a share of
//! every resource on its path (teleporter set of each departing router,
//! generator bank of each link, purifier bank at each endpoint site);
//! resources are time-multiplexed equally among the flows using them, and
//! a flow advances at the rate of its most contended resource. A channel
//! is ready one pipeline latency after its last raw pair enters the path.

mod packet;
mod report;

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use packet::{PauliFrame, QubitIdPacket};
pub use report::{
    write_trace_csv, ClassSummary, Histogram, PairLedger, SimReport, TraceKind, TraceRow, Utilization,
};

use crate::channel::{plan_channel_with, ChannelError, PlacementScheme, PlannerConfig, Stage};
use crate::fidelity::{teleport_latency, DistanceCells};
use crate::params::ParameterSet;
use crate::purification::{purify_round_latency, Protocol};
use crate::topology::{dimension_order_path, Coordinate, Dimension, GridLayout, LqCapacity, TopologyError};
use crate::workloads::{placement_for, InstructionStream, LogicalInstruction, Placement, WorkloadError};

/// Logical qubits a site can hold at once: its resident plus one visitor
/// in Home Base, two residents in Mobile.
pub const SITE_SLOTS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub scheme: PlacementScheme,
    pub protocol: Protocol,
    pub endpoint_depth_cap: usize,
    pub physical_per_logical: u32,
    /// Duration of the logical two-qubit gate once both operands meet.
    pub gate_time: f64,
    /// Samples purification outcomes instead of using expected pair counts.
    pub seed: Option<u64>,
    pub trace: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            scheme: PlacementScheme::EndpointsOnly,
            protocol: Protocol::Dejmps,
            endpoint_depth_cap: 5,
            physical_per_logical: 49,
            gate_time: 0.0,
            seed: None,
            trace: false,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("instruction {seq} names qubit {qubit}, which has no placement")]
    UnknownQubit { seq: usize, qubit: u32 },
    #[error("instruction {seq} uses the same qubit twice")]
    SameQubit { seq: usize },
    #[error("site {site} starts with more than {SITE_SLOTS} qubits")]
    Overfull { site: Coordinate },
    #[error("no feasible channel over {hops} hops (fails at the {stage} stage)")]
    Infeasible { hops: u32, stage: Stage },
    #[error("channel needs {rounds} endpoint rounds but purifiers are {depth} deep")]
    DepthExceeded { rounds: usize, depth: usize },
    #[error("the simulator does not model {0} purification")]
    UnsupportedScheme(PlacementScheme),
    #[error("deadlock at t={time} us: {}", blocked.join("; "))]
    Deadlock { time: f64, blocked: Vec<String> },
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

fn check_stream(stream: &InstructionStream, placement: &Placement) -> Result<(), SimError> {
    for op in &stream.ops {
        if op.a == op.b {
            return Err(SimError::SameQubit { seq: op.seq });
        }
        for q in [op.a, op.b] {
            if placement.site(q).is_none() {
                return Err(SimError::UnknownQubit { seq: op.seq, qubit: q });
            }
        }
    }
    Ok(())
}

/// Dependency levels: an instruction sits one level above the latest
/// earlier instruction sharing a qubit with it. Each level lists stream
/// indices in stream order.
pub fn schedule(stream: &InstructionStream, placement: &Placement) -> Result<Vec<Vec<usize>>, SimError> {
    check_stream(stream, placement)?;
    let mut level_of_qubit = vec![0usize; placement.len() + 1];
    let mut levels: Vec<Vec<usize>> = Vec::new();
    for (i, op) in stream.ops.iter().enumerate() {
        let level = level_of_qubit[op.a as usize].max(level_of_qubit[op.b as usize]);
        if level == levels.len() {
            levels.push(Vec::new());
        }
        levels[level].push(i);
        level_of_qubit[op.a as usize] = level + 1;
        level_of_qubit[op.b as usize] = level + 1;
    }
    Ok(levels)
}

#[derive(Debug, Clone)]
struct ChannelCost {
    rounds: usize,
    success: Vec<f64>,
    endpoint_pairs: f64,
    wire_pairs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Leg {
    /// Operand travels to its partner.
    Outbound,
    /// Home Base visitor goes back after the gate.
    Return,
    /// Mobile qubit goes back to its start after its last instruction.
    Home,
    /// Channel only, for idle-network queries.
    Probe,
}

#[derive(Debug, Clone)]
struct Transfer {
    qubit: u32,
    from: Coordinate,
    to: Coordinate,
    instr: Option<usize>,
    leg: Leg,
    latency: f64,
    isolated: f64,
    opened: f64,
    ready: f64,
}

#[derive(Debug, Clone)]
struct Flow {
    transfer: usize,
    /// Resource index and busy time per raw pair.
    uses: Vec<(usize, f64)>,
    total: f64,
    remaining: f64,
    rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EventKind {
    TeleportComplete,
    ChannelReady,
    GateComplete,
}

impl EventKind {
    /// Arrivals before departures at equal times.
    fn precedence(self) -> u8 {
        match self {
            EventKind::TeleportComplete => 0,
            EventKind::ChannelReady => 1,
            EventKind::GateComplete => 2,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    time: f64,
    kind: EventKind,
    subject: usize,
    seq: u64,
}

impl Pending {
    fn key(&self) -> (f64, u8, usize, u64) {
        (self.time, self.kind.precedence(), self.subject, self.seq)
    }
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    // Reversed so the max-heap pops the earliest event.
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (self.key(), other.key());
        b.0.total_cmp(&a.0)
            .then(b.1.cmp(&a.1))
            .then(b.2.cmp(&a.2))
            .then(b.3.cmp(&a.3))
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Pauli product up to phase on labels I=0, X=1, Y=2, Z=3.
fn pauli_product(a: u8, b: u8) -> u8 {
    match (a, b) {
        (0, p) | (p, 0) => p,
        (p, q) if p == q => 0,
        (p, q) => 6 - p - q,
    }
}

fn pauli_label(x: bool, z: bool) -> u8 {
    match (x, z) {
        (false, false) => 0,
        (true, false) => 1,
        (true, true) => 2,
        (false, true) => 3,
    }
}

/// Raw pairs consumed to distill one pair at `level`, failures included.
fn sample_raw(level: usize, success: &[f64], rng: &mut ChaCha8Rng) -> u64 {
    if level == 0 {
        return 1;
    }
    let mut spent = 0;
    loop {
        spent += sample_raw(level - 1, success, rng) + sample_raw(level - 1, success, rng);
        if rng.gen::<f64>() < success[level - 1] {
            return spent;
        }
    }
}

struct Engine<'a> {
    layout: &'a GridLayout,
    params: &'a ParameterSet,
    config: SimConfig,
    policy: LqCapacity,
    costs: HashMap<u32, ChannelCost>,
    now: f64,

    routers: usize,
    links: usize,
    capacity: Vec<f64>,
    active: Vec<u32>,
    busy: Vec<f64>,
    flows: Vec<Flow>,
    live: Vec<usize>,
    dirty: bool,
    load_scratch: Vec<f64>,

    heap: BinaryHeap<Pending>,
    seq: u64,
    transfers: Vec<Transfer>,
    occupancy: Vec<usize>,
    waiters: Vec<VecDeque<usize>>,
    location: Vec<Coordinate>,
    start: Vec<Coordinate>,

    ops: &'a [LogicalInstruction],
    queues: Vec<VecDeque<usize>>,
    issued: Vec<bool>,
    completed: usize,

    rng: Option<ChaCha8Rng>,
    report: SimReport,
    trace: Vec<TraceRow>,
}

impl<'a> Engine<'a> {
    fn new(
        layout: &'a GridLayout,
        params: &'a ParameterSet,
        config: SimConfig,
        placement: &Placement,
        ops: &'a [LogicalInstruction],
    ) -> Result<Self, SimError> {
        if config.scheme.purifies_between() {
            return Err(SimError::UnsupportedScheme(config.scheme));
        }
        let routers = layout.router_count();
        let links = layout.links.len();
        let spec = &layout.spec;
        let mut capacity = vec![layout.teleporters_per_set() as f64; 2 * routers];
        capacity.extend(std::iter::repeat_n(spec.g as f64, links));
        capacity.extend(std::iter::repeat_n(spec.p as f64, routers));
        let n_resources = capacity.len();

        let mut occupancy = vec![0usize; routers];
        for &site in &placement.sites {
            layout.check(site)?;
            let i = layout.router_index(site);
            occupancy[i] += 1;
            if occupancy[i] > SITE_SLOTS {
                return Err(SimError::Overfull { site });
            }
        }
        let mut queues = vec![VecDeque::new(); placement.len() + 1];
        for (i, op) in ops.iter().enumerate() {
            queues[op.a as usize].push_back(i);
            queues[op.b as usize].push_back(i);
        }
        let mut start = vec![Coordinate::new(0, 0)];
        start.extend(placement.sites.iter().copied());

        Ok(Self {
            layout,
            params,
            config,
            policy: placement.policy,
            costs: HashMap::new(),
            now: 0.0,
            routers,
            links,
            capacity,
            active: vec![0; n_resources],
            busy: vec![0.0; n_resources],
            flows: Vec::new(),
            live: Vec::new(),
            dirty: false,
            load_scratch: vec![0.0; 2 * routers],
            heap: BinaryHeap::new(),
            seq: 0,
            transfers: Vec::new(),
            occupancy,
            waiters: vec![VecDeque::new(); routers],
            location: start.clone(),
            start,
            ops,
            queues,
            issued: vec![false; ops.len()],
            completed: 0,
            rng: config.seed.map(ChaCha8Rng::seed_from_u64),
            report: SimReport {
                instructions: ops.len(),
                storage_per_link: layout.storage_per_link(),
                ..SimReport::default()
            },
            trace: Vec::new(),
        })
    }

    fn teleporter(&self, router: Coordinate, dim: Dimension) -> usize {
        2 * self.layout.router_index(router) + usize::from(dim == Dimension::Y)
    }

    fn generator(&self, link: usize) -> usize {
        2 * self.routers + link
    }

    fn purifier(&self, site: Coordinate) -> usize {
        2 * self.routers + self.links + self.layout.router_index(site)
    }

    fn log(&mut self, kind: TraceKind, subject: impl FnOnce() -> String) {
        if self.config.trace {
            self.trace.push(TraceRow { time: self.now, kind, subject: subject() });
        }
    }

    fn push(&mut self, time: f64, kind: EventKind, subject: usize) {
        self.seq += 1;
        self.heap.push(Pending { time, kind, subject, seq: self.seq });
    }

    fn cost(&mut self, hops: u32) -> Result<ChannelCost, SimError> {
        if let Some(c) = self.costs.get(&hops) {
            return Ok(c.clone());
        }
        let spacing = self.layout.spec.hop_spacing;
        let planner = PlannerConfig {
            hop_spacing: spacing,
            protocol: self.config.protocol,
            endpoint_depth_cap: self.config.endpoint_depth_cap,
            ..PlannerConfig::default()
        };
        let distance = DistanceCells(hops as u64 * spacing.cells());
        let plan = plan_channel_with(distance, self.config.scheme, self.params, &planner)?;
        if let Some(stage) = plan.infeasible {
            return Err(SimError::Infeasible { hops, stage });
        }
        if plan.rounds_endpoint > self.layout.spec.depth {
            return Err(SimError::DepthExceeded { rounds: plan.rounds_endpoint, depth: self.layout.spec.depth });
        }
        let cost = ChannelCost {
            rounds: plan.rounds_endpoint,
            endpoint_pairs: plan.endpoint_pairs(),
            success: plan.endpoint_success,
            wire_pairs: plan.wire_pairs,
        };
        self.costs.insert(hops, cost.clone());
        Ok(cost)
    }

    fn local_move(&self) -> f64 {
        self.params.times.t_mv * self.layout.spec.local_cells as f64
    }

    fn start_transfer(
        &mut self,
        qubit: u32,
        from: Coordinate,
        to: Coordinate,
        instr: Option<usize>,
        leg: Leg,
        purified: u32,
    ) -> Result<(), SimError> {
        let t = &self.params.times;
        let path = dimension_order_path(from, to);
        let hops = (path.len() - 1) as u32;
        let cost = self.cost(hops)?;
        let raw = match self.rng.as_mut() {
            Some(rng) => (0..purified).map(|_| sample_raw(cost.rounds, &cost.success, rng)).sum::<u64>() as f64,
            None => purified as f64 * cost.endpoint_pairs,
        };

        let spacing = self.layout.spec.hop_spacing;
        let hop_time = teleport_latency(spacing, t);
        let distance = self.layout.distance(from, to);
        let round = purify_round_latency(distance, t);
        let mid = hops as usize / 2;
        let mut uses = Vec::with_capacity(2 * path.len() + 2);
        let mut turns = 0;
        let mut last_dim = None;
        for (i, w) in path.windows(2).enumerate() {
            let dim = if w[0].y == w[1].y { Dimension::X } else { Dimension::Y };
            if last_dim.is_some_and(|d| d != dim) {
                turns += 1;
            }
            last_dim = Some(dim);
            // Halves left of the generator travel toward the source.
            let departing = if i < mid { w[1] } else { w[0] };
            uses.push((self.teleporter(departing, dim), hop_time));
            let link = self.layout.link_index(w[0], w[1]).expect("path links exist");
            let distributed = if i == mid { t.t_gen } else { 0.0 };
            uses.push((self.generator(link), t.t_gen * cost.wire_pairs + distributed));
        }
        if cost.rounds > 0 {
            uses.push((self.purifier(from), round / 2.0));
            uses.push((self.purifier(to), round / 2.0));
        }
        uses.sort_by_key(|u| u.0);
        uses.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });

        let latency = t.t_gen
            + hops as f64 * hop_time
            + turns as f64 * self.local_move()
            + self.local_move()
            + cost.rounds as f64 * round;
        let isolated_rate = uses
            .iter()
            .map(|&(r, s)| self.capacity[r] / s)
            .fold(f64::INFINITY, f64::min);

        let id = self.transfers.len();
        self.transfers.push(Transfer {
            qubit,
            from,
            to,
            instr,
            leg,
            latency,
            isolated: raw / isolated_rate + latency,
            opened: self.now,
            ready: f64::NAN,
        });

        let ledger = &mut self.report.pairs;
        let links = raw * hops as f64;
        ledger.generated += raw + links * cost.wire_pairs;
        ledger.nonlocal += raw;
        ledger.teleport_assist += links;
        ledger.wire_sacrificed += links * (cost.wire_pairs - 1.0);
        ledger.endpoint_sacrificed += raw - purified as f64;
        ledger.data_teleport += purified as f64;
        ledger.recycled_qubits += 2.0 * (links * cost.wire_pairs + raw - purified as f64) + purified as f64;
        self.report.channels += 1;
        self.check_frames(id as u64, to, from, hops);

        for &(r, _) in &uses {
            self.active[r] += 1;
        }
        let flow = self.flows.len();
        self.flows.push(Flow { transfer: id, uses, total: raw, remaining: raw, rate: 0.0 });
        self.live.push(flow);
        self.dirty = true;
        self.log(TraceKind::ChannelOpen, || format!("q{qubit} {from}->{to}"));
        Ok(())
    }

    /// Folds one representative packet along the path and compares it
    /// with the operator product of the same corrections.
    fn check_frames(&mut self, id: u64, dest: Coordinate, partner: Coordinate, hops: u32) {
        let mut packet = QubitIdPacket::new(id, dest, partner);
        let mut product = 0u8;
        for hop in 0..hops {
            let bits = match self.rng.as_mut() {
                Some(rng) => rng.gen::<u8>(),
                None => splitmix(id << 8 | hop as u64) as u8,
            };
            let (x, z) = (bits & 1 == 1, bits & 2 == 2);
            packet.record_teleport(x, z);
            product = pauli_product(pauli_label(x, z), product);
        }
        let folded = packet.correction.bits();
        self.report.frames_checked += 1;
        if pauli_label(folded & 1 == 1, folded & 2 == 2) != product {
            self.report.frame_mismatches += 1;
        }
    }

    fn recompute_rates(&mut self) {
        self.load_scratch.iter_mut().for_each(|l| *l = 0.0);
        let tele = 2 * self.routers;
        for &f in &self.live {
            let flow = &mut self.flows[f];
            flow.rate = flow
                .uses
                .iter()
                .map(|&(r, s)| self.capacity[r] / (self.active[r] as f64 * s))
                .fold(f64::INFINITY, f64::min);
            for &(r, s) in &flow.uses {
                if r < tele {
                    self.load_scratch[r] += flow.rate * s;
                }
            }
        }
        // Pairs held at a router: in-flight teleports through either set.
        for pair in self.load_scratch.chunks(2) {
            let held = pair[0] + pair[1];
            if held > self.report.peak_link_storage {
                self.report.peak_link_storage = held;
            }
        }
        self.dirty = false;
    }

    fn advance(&mut self, to: f64) {
        let dt = to - self.now;
        if dt > 0.0 {
            for &f in &self.live {
                let flow = &mut self.flows[f];
                flow.remaining -= flow.rate * dt;
                for &(r, s) in &flow.uses {
                    self.busy[r] += flow.rate * s * dt;
                }
            }
        }
        self.now = to;
    }

    fn next_drain(&self) -> Option<(f64, usize)> {
        self.live
            .iter()
            .map(|&f| (self.now + self.flows[f].remaining.max(0.0) / self.flows[f].rate, f))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
    }

    fn drain(&mut self, first: usize) {
        let mut done: Vec<usize> = self
            .live
            .iter()
            .copied()
            .filter(|&f| f == first || self.flows[f].remaining <= 1e-9 * self.flows[f].total.max(1.0))
            .collect();
        done.sort_unstable();
        self.live.retain(|f| !done.contains(f));
        for f in done {
            self.flows[f].remaining = 0.0;
            for i in 0..self.flows[f].uses.len() {
                let r = self.flows[f].uses[i].0;
                self.active[r] -= 1;
            }
            let t = self.flows[f].transfer;
            let ready = self.now + self.transfers[t].latency;
            self.push(ready, EventKind::ChannelReady, t);
            self.log(TraceKind::StreamDrained, || format!("transfer {t}"));
        }
        self.dirty = true;
    }

    fn try_teleport(&mut self, t: usize) {
        let dest = self.layout.router_index(self.transfers[t].to);
        if self.occupancy[dest] >= SITE_SLOTS {
            self.waiters[dest].push_back(t);
            return;
        }
        self.occupancy[dest] += 1;
        let tr = &self.transfers[t];
        let duration = teleport_latency(self.layout.distance(tr.from, tr.to), &self.params.times);
        let waited = self.now - tr.ready;
        self.report.slot_wait.record(waited);
        self.push(self.now + duration, EventKind::TeleportComplete, t);
        self.log(TraceKind::TeleportStart, || format!("transfer {t}"));
    }

    fn issue(&mut self, op: usize) -> Result<(), SimError> {
        self.issued[op] = true;
        let LogicalInstruction { seq, a, b } = self.ops[op];
        self.log(TraceKind::InstructionIssue, || format!("op {seq} q{a} q{b}"));
        let (from, to) = (self.location[a as usize], self.location[b as usize]);
        if from == to {
            self.push(self.now + self.config.gate_time, EventKind::GateComplete, op);
            Ok(())
        } else {
            self.start_transfer(a, from, to, Some(op), Leg::Outbound, self.config.physical_per_logical)
        }
    }

    fn try_issue(&mut self, op: usize) -> Result<(), SimError> {
        let LogicalInstruction { a, b, .. } = self.ops[op];
        if !self.issued[op]
            && self.queues[a as usize].front() == Some(&op)
            && self.queues[b as usize].front() == Some(&op)
        {
            self.issue(op)?;
        }
        Ok(())
    }

    fn complete(&mut self, op: usize) -> Result<(), SimError> {
        self.completed += 1;
        let LogicalInstruction { seq, a, b } = self.ops[op];
        self.log(TraceKind::InstructionComplete, || format!("op {seq}"));
        let mut next = Vec::with_capacity(2);
        for q in [a, b] {
            let queue = &mut self.queues[q as usize];
            queue.pop_front();
            match queue.front() {
                Some(&n) => next.push(n),
                None => {
                    let (at, home) = (self.location[q as usize], self.start[q as usize]);
                    if at != home {
                        self.start_transfer(q, at, home, None, Leg::Home, self.config.physical_per_logical)?;
                    }
                }
            }
        }
        next.sort_unstable();
        next.dedup();
        for n in next {
            self.try_issue(n)?;
        }
        Ok(())
    }

    fn handle(&mut self, ev: Pending) -> Result<(), SimError> {
        self.report.events += 1;
        match ev.kind {
            EventKind::ChannelReady => {
                let t = ev.subject;
                self.transfers[t].ready = self.now;
                let tr = &self.transfers[t];
                let wait = self.now - tr.opened - tr.isolated;
                self.report.channel_wait.record(if wait.abs() < 1e-9 { 0.0 } else { wait });
                self.log(TraceKind::ChannelReady, || format!("transfer {t}"));
                if self.transfers[t].leg != Leg::Probe {
                    self.try_teleport(t);
                }
            }
            EventKind::TeleportComplete => {
                let t = ev.subject;
                let Transfer { qubit, from, to, instr, leg, .. } = self.transfers[t].clone();
                let src = self.layout.router_index(from);
                self.occupancy[src] -= 1;
                self.location[qubit as usize] = to;
                self.report.data_teleports += 1;
                self.log(TraceKind::TeleportComplete, || format!("transfer {t} q{qubit} at {to}"));
                while self.occupancy[src] < SITE_SLOTS {
                    match self.waiters[src].pop_front() {
                        Some(w) => self.try_teleport(w),
                        None => break,
                    }
                }
                match (leg, instr) {
                    (Leg::Outbound, Some(op)) => {
                        self.push(self.now + self.config.gate_time, EventKind::GateComplete, op)
                    }
                    (Leg::Return, Some(op)) => self.complete(op)?,
                    _ => {}
                }
            }
            EventKind::GateComplete => {
                let op = ev.subject;
                self.log(TraceKind::GateComplete, || format!("op {}", self.ops[op].seq));
                let a = self.ops[op].a;
                let (at, home) = (self.location[a as usize], self.start[a as usize]);
                if self.policy == LqCapacity::HomeBase && at != home {
                    self.start_transfer(a, at, home, Some(op), Leg::Return, self.config.physical_per_logical)?;
                } else {
                    self.complete(op)?;
                }
            }
        }
        Ok(())
    }

    fn run_loop(&mut self) -> Result<(), SimError> {
        loop {
            if self.dirty {
                self.recompute_rates();
            }
            let drain = self.next_drain();
            let event = self.heap.peek().map(|e| e.time);
            match (drain, event) {
                (None, None) => return Ok(()),
                (Some((td, f)), ev) if ev.is_none_or(|te| td <= te) => {
                    self.advance(td);
                    self.drain(f);
                }
                (_, Some(te)) => {
                    self.advance(te);
                    let ev = self.heap.pop().expect("peeked");
                    self.handle(ev)?;
                }
                _ => unreachable!("a drain without events always wins"),
            }
        }
    }

    fn deadlock(&self) -> SimError {
        let mut blocked = Vec::new();
        for (site, queue) in self.waiters.iter().enumerate() {
            for &t in queue {
                let tr = &self.transfers[t];
                blocked.push(format!(
                    "q{} waits for a slot at {} (full)",
                    tr.qubit,
                    self.layout.coordinate(site)
                ));
            }
        }
        for (i, op) in self.ops.iter().enumerate() {
            if !self.issued[i] && blocked.len() < 16 {
                blocked.push(format!("op {} (q{}, q{}) never issued", op.seq, op.a, op.b));
            }
        }
        SimError::Deadlock { time: self.now, blocked }
    }

    fn finish(mut self) -> (SimReport, Vec<TraceRow>) {
        let makespan = self.now;
        let frac = |busy: f64, cap: f64| if makespan > 0.0 { (busy / (cap * makespan)).min(1.0) } else { 0.0 };
        let r = self.routers;
        let util = |range: std::ops::Range<usize>, step: usize| -> Vec<f64> {
            range.step_by(step).map(|i| frac(self.busy[i], self.capacity[i])).collect()
        };
        let tx = util(0..2 * r, 2);
        let ty = util(1..2 * r, 2);
        let gens = util(2 * r..2 * r + self.links, 1);
        let purs = util(2 * r + self.links..2 * r + self.links + r, 1);
        self.report.makespan = makespan;
        self.report.utilization = Utilization::new(tx, ty, gens, purs);
        (self.report, self.trace)
    }
}

/// Runs `stream` with the layout's placement policy and default settings.
pub fn run(stream: &InstructionStream, layout: &GridLayout, params: &ParameterSet) -> Result<SimReport, SimError> {
    let placement = placement_for(stream.qubits as usize, layout)?;
    run_with(stream, &placement, layout, params, &SimConfig::default()).map(|(r, _)| r)
}

pub fn run_with(
    stream: &InstructionStream,
    placement: &Placement,
    layout: &GridLayout,
    params: &ParameterSet,
    config: &SimConfig,
) -> Result<(SimReport, Vec<TraceRow>), SimError> {
    check_stream(stream, placement)?;
    let mut engine = Engine::new(layout, params, *config, placement, &stream.ops)?;
    for op in 0..stream.ops.len() {
        engine.try_issue(op)?;
    }
    engine.run_loop()?;
    if engine.completed < stream.ops.len() {
        return Err(engine.deadlock());
    }
    Ok(engine.finish())
}

/// Ready times of channels opened together at time zero on an idle mesh,
/// each delivering `pairs_needed` purified pairs per endpoint.
pub fn open_channels(
    channels: &[(Coordinate, Coordinate)],
    pairs_needed: u32,
    layout: &GridLayout,
    params: &ParameterSet,
    config: &SimConfig,
) -> Result<Vec<f64>, SimError> {
    let placement = Placement { policy: layout.spec.lq_capacity, sites: Vec::new() };
    let mut engine = Engine::new(layout, params, *config, &placement, &[])?;
    let mut local = Vec::with_capacity(channels.len());
    for &(src, dst) in channels {
        layout.check(src)?;
        layout.check(dst)?;
        if src == dst {
            let cost = engine.cost(0)?;
            let round = purify_round_latency(DistanceCells(0), &params.times);
            local.push(Some(params.times.t_gen + engine.local_move() + cost.rounds as f64 * round));
        } else {
            local.push(None);
            engine.start_transfer(0, src, dst, None, Leg::Probe, pairs_needed)?;
        }
    }
    engine.run_loop()?;
    let mut remote = engine.transfers.iter().map(|t| t.ready);
    Ok(local
        .into_iter()
        .map(|l| l.unwrap_or_else(|| remote.next().expect("one transfer per remote channel")))
        .collect())
}

/// Idle-mesh ready time for one channel.
pub fn open_channel(
    src: Coordinate,
    dst: Coordinate,
    pairs_needed: u32,
    layout: &GridLayout,
    params: &ParameterSet,
    config: &SimConfig,
) -> Result<f64, SimError> {
    Ok(open_channels(&[(src, dst)], pairs_needed, layout, params, config)?[0])
}

/// Idle-mesh completion time of moving one logical qubit: channel setup
/// followed by the data teleport. Zero when source and destination agree.
pub fn teleport_logical(
    src: Coordinate,
    dst: Coordinate,
    layout: &GridLayout,
    params: &ParameterSet,
    config: &SimConfig,
) -> Result<f64, SimError> {
    if src == dst {
        return Ok(0.0);
    }
    let ready = open_channel(src, dst, config.physical_per_logical, layout, params, config)?;
    Ok(ready + teleport_latency(layout.distance(src, dst), &params.times))
}
