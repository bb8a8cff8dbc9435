//! Benchmark communication patterns and logical qubit placements.
//!
//! Qubits are numbered from 1. Only two-qubit operations appear in a
//! stream, since only they generate communication.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::{Coordinate, GridLayout, LqCapacity};

pub type QubitId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LogicalInstruction {
    pub seq: usize,
    pub a: QubitId,
    pub b: QubitId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionStream {
    pub qubits: u32,
    pub ops: Vec<LogicalInstruction>,
}

#[derive(Debug, Error, PartialEq)]
pub enum WorkloadError {
    #[error("{0}")]
    Size(String),
    #[error("{n} qubits exceed layout capacity {capacity}")]
    Capacity { n: usize, capacity: usize },
    #[error("stream line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Benchmark {
    Qft,
    ModMult,
    ModExp,
}

impl std::str::FromStr for Benchmark {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "qft" => Ok(Benchmark::Qft),
            "mm" => Ok(Benchmark::ModMult),
            "me" => Ok(Benchmark::ModExp),
            other => Err(format!("unknown benchmark `{other}` (qft, mm or me)")),
        }
    }
}

impl std::fmt::Display for Benchmark {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Benchmark::Qft => "qft",
            Benchmark::ModMult => "mm",
            Benchmark::ModExp => "me",
        })
    }
}

impl InstructionStream {
    fn from_pairs(qubits: u32, pairs: impl IntoIterator<Item = (QubitId, QubitId)>) -> Self {
        let ops = pairs
            .into_iter()
            .enumerate()
            .map(|(seq, (a, b))| LogicalInstruction { seq, a, b })
            .collect();
        Self { qubits, ops }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }
}

fn all_to_all(qubits: &[QubitId]) -> Vec<(QubitId, QubitId)> {
    let n = qubits.len();
    let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for sum in 1..(2 * n).saturating_sub(2) {
        for i in 0..sum.div_ceil(2) {
            let j = sum - i;
            if j < n {
                pairs.push((qubits[i], qubits[j]));
            }
        }
    }
    pairs
}

/// Every pair once, ordered by index sum and then by the lower index, so
/// that each qubit meets its partners in ascending order.
pub fn qft_pattern(n: u32) -> Result<InstructionStream, WorkloadError> {
    if n < 2 {
        return Err(WorkloadError::Size(format!("qft needs at least 2 qubits, got {n}")));
    }
    let qubits: Vec<_> = (1..=n).collect();
    Ok(InstructionStream::from_pairs(n, all_to_all(&qubits)))
}

/// Register A is qubits `1..=n_a`, register B follows.
pub fn modmult_pattern(n_a: u32, n_b: u32) -> Result<InstructionStream, WorkloadError> {
    if n_a == 0 || n_b == 0 {
        return Err(WorkloadError::Size("modmult registers must be non-empty".into()));
    }
    let pairs = (1..=n_a).flat_map(|a| (1..=n_b).map(move |b| (a, n_a + b)));
    Ok(InstructionStream::from_pairs(n_a + n_b, pairs))
}

/// Each step squares (all-to-all on the lower half) then multiplies
/// (lower half against upper half).
pub fn modexp_pattern(n: u32, steps: u32) -> Result<InstructionStream, WorkloadError> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(WorkloadError::Size(format!("modexp needs an even qubit count, got {n}")));
    }
    if steps == 0 {
        return Err(WorkloadError::Size("modexp needs at least one step".into()));
    }
    let half = n / 2;
    let low: Vec<_> = (1..=half).collect();
    let square = all_to_all(&low);
    let multiply: Vec<_> = (1..=half).flat_map(|a| (1..=half).map(move |b| (a, half + b))).collect();
    let pairs = (0..steps).flat_map(|_| square.iter().chain(multiply.iter()).copied());
    Ok(InstructionStream::from_pairs(n, pairs))
}

pub fn benchmark_stream(benchmark: Benchmark, n: u32) -> Result<InstructionStream, WorkloadError> {
    match benchmark {
        Benchmark::Qft => qft_pattern(n),
        Benchmark::ModMult => {
            if n < 2 {
                return Err(WorkloadError::Size(format!("modmult needs at least 2 qubits, got {n}")));
            }
            modmult_pattern(n / 2, n - n / 2)
        }
        Benchmark::ModExp => modexp_pattern(n, 1),
    }
}

/// Start site of every qubit; index `q - 1` holds qubit `q`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub policy: LqCapacity,
    pub sites: Vec<Coordinate>,
}

impl Placement {
    pub fn site(&self, q: QubitId) -> Option<Coordinate> {
        self.sites.get((q as usize).checked_sub(1)?).copied()
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }
}

/// Row-major, one qubit per site.
pub fn home_base_placement(n: usize, layout: &GridLayout) -> Result<Placement, WorkloadError> {
    let capacity = layout.router_count();
    if n > capacity {
        return Err(WorkloadError::Capacity { n, capacity });
    }
    Ok(Placement {
        policy: LqCapacity::HomeBase,
        sites: (0..n).map(|i| layout.coordinate(i)).collect(),
    })
}

/// Snake order down the first column, up the second, and so on, so that
/// consecutive qubits sit on adjacent sites.
pub fn serpentine(rows: usize, cols: usize) -> Vec<Coordinate> {
    let mut order = Vec::with_capacity(rows * cols);
    for x in 0..cols {
        for k in 0..rows {
            let y = if x % 2 == 0 { k } else { rows - 1 - k };
            order.push(Coordinate::new(x, y));
        }
    }
    order
}

/// Qubits follow the serpentine; once every site holds one qubit the
/// walk repeats to fill second slots.
pub fn mobile_placement(n: usize, layout: &GridLayout) -> Result<Placement, WorkloadError> {
    let order = serpentine(layout.rows(), layout.cols());
    let capacity = order.len() * LqCapacity::Mobile.slots();
    if n > capacity {
        return Err(WorkloadError::Capacity { n, capacity });
    }
    Ok(Placement {
        policy: LqCapacity::Mobile,
        sites: order.iter().cycle().take(n).copied().collect(),
    })
}

pub fn placement_for(n: usize, layout: &GridLayout) -> Result<Placement, WorkloadError> {
    match layout.spec.lq_capacity {
        LqCapacity::HomeBase => home_base_placement(n, layout),
        LqCapacity::Mobile => mobile_placement(n, layout),
    }
}

/// `op <seq> <qa> <qb>` lines followed by `place <q> <x> <y>` lines.
pub fn write_stream(stream: &InstructionStream, placement: Option<&Placement>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "qubits {}", stream.qubits);
    for op in &stream.ops {
        let _ = writeln!(out, "op {} {} {}", op.seq, op.a, op.b);
    }
    if let Some(p) = placement {
        for (i, c) in p.sites.iter().enumerate() {
            let _ = writeln!(out, "place {} {} {}", i + 1, c.x, c.y);
        }
    }
    out
}

/// Parses the text written by [`write_stream`]. The `qubits` line is
/// optional; without it the count is the highest referenced id.
pub fn parse_stream(text: &str) -> Result<(InstructionStream, BTreeMap<QubitId, Coordinate>), WorkloadError> {
    let mut ops = Vec::new();
    let mut places = BTreeMap::new();
    let mut declared = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |message: String| WorkloadError::Parse { line: line_no, message };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut words = line.split_whitespace();
        let head = words.next().unwrap_or_default();
        let nums: Vec<usize> = words
            .map(|w| w.parse::<usize>().map_err(|e| err(format!("`{w}`: {e}"))))
            .collect::<Result<_, _>>()?;
        match (head, nums.as_slice()) {
            ("qubits", [n]) => declared = Some(*n as u32),
            ("op", [seq, a, b]) => {
                if a == b || *a == 0 || *b == 0 {
                    return Err(err(format!("op {seq} needs two distinct qubits numbered from 1")));
                }
                if *seq != ops.len() {
                    return Err(err(format!("op sequence {seq} out of order, expected {}", ops.len())));
                }
                ops.push(LogicalInstruction { seq: *seq, a: *a as u32, b: *b as u32 });
            }
            ("place", [q, x, y]) => {
                if *q == 0 {
                    return Err(err("qubits are numbered from 1".into()));
                }
                places.insert(*q as u32, Coordinate::new(*x, *y));
            }
            _ => return Err(err(format!("unrecognized line `{line}`"))),
        }
    }
    let highest = ops.iter().map(|o| o.a.max(o.b)).max().unwrap_or(0);
    let qubits = declared.unwrap_or(highest);
    if highest > qubits {
        return Err(WorkloadError::Size(format!("qubit {highest} exceeds declared count {qubits}")));
    }
    Ok((InstructionStream { qubits, ops }, places))
}
