use std::io::{self, Write};

use serde::{Deserialize, Serialize};

/// Log-spaced wait histogram in microseconds. Bucket `k` counts waits
/// below `edges[k]` and at or above the previous edge; the last bucket is
/// open-ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub total: f64,
    pub max: f64,
}

impl Default for Histogram {
    fn default() -> Self {
        let edges: Vec<f64> = (0..8).map(|k| 10f64.powi(k)).collect();
        Self { counts: vec![0; edges.len() + 1], edges, total: 0.0, max: 0.0 }
    }
}

impl Histogram {
    pub fn record(&mut self, wait: f64) {
        let wait = wait.max(0.0);
        let k = self.edges.iter().position(|&e| wait < e).unwrap_or(self.edges.len());
        self.counts[k] += 1;
        self.total += wait;
        self.max = self.max.max(wait);
    }

    pub fn samples(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        match self.samples() {
            0 => 0.0,
            n => self.total / n as f64,
        }
    }
}

/// EPR pair bookkeeping. Every generated pair ends in exactly one of the
/// consumption buckets.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PairLedger {
    pub generated: f64,
    /// Pairs whose halves crossed at least one teleport hop.
    pub nonlocal: f64,
    pub teleport_assist: f64,
    pub wire_sacrificed: f64,
    pub endpoint_sacrificed: f64,
    pub data_teleport: f64,
    /// Measured or discarded qubits returned to generators.
    pub recycled_qubits: f64,
}

impl PairLedger {
    pub fn consumed(&self) -> f64 {
        self.teleport_assist + self.wire_sacrificed + self.endpoint_sacrificed + self.data_teleport
    }

    pub fn imbalance(&self) -> f64 {
        (self.generated - self.consumed()).abs()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub mean: f64,
    pub max: f64,
}

impl ClassSummary {
    fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        Self {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            max: values.iter().copied().fold(0.0, f64::max),
        }
    }
}

/// Busy fraction of each node over the makespan.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Utilization {
    pub teleporter: ClassSummary,
    pub generator: ClassSummary,
    pub purifier: ClassSummary,
    /// Per router, row-major.
    pub teleporter_x: Vec<f64>,
    pub teleporter_y: Vec<f64>,
    /// Per link, in layout order.
    pub generator_links: Vec<f64>,
    /// Per site, row-major.
    pub purifier_sites: Vec<f64>,
}

impl Utilization {
    pub(crate) fn new(x: Vec<f64>, y: Vec<f64>, g: Vec<f64>, p: Vec<f64>) -> Self {
        let both: Vec<f64> = x.iter().chain(&y).copied().collect();
        Self {
            teleporter: ClassSummary::of(&both),
            generator: ClassSummary::of(&g),
            purifier: ClassSummary::of(&p),
            teleporter_x: x,
            teleporter_y: y,
            generator_links: g,
            purifier_sites: p,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub makespan: f64,
    pub instructions: usize,
    pub channels: usize,
    pub data_teleports: usize,
    pub events: usize,
    pub pairs: PairLedger,
    pub utilization: Utilization,
    /// Channel setup time beyond what the channel needs on an idle mesh.
    pub channel_wait: Histogram,
    /// Time a ready data teleport waited for room at its destination.
    pub slot_wait: Histogram,
    /// Largest number of pairs held in flight on one router's incoming links.
    pub peak_link_storage: f64,
    pub storage_per_link: usize,
    pub frames_checked: usize,
    pub frame_mismatches: usize,
}

impl SimReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is plain data")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TraceKind {
    InstructionIssue,
    ChannelOpen,
    StreamDrained,
    ChannelReady,
    TeleportStart,
    TeleportComplete,
    GateComplete,
    InstructionComplete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub time: f64,
    pub kind: TraceKind,
    pub subject: String,
}

pub fn write_trace_csv<W: Write>(out: &mut W, rows: &[TraceRow]) -> io::Result<()> {
    writeln!(out, "time_us,kind,subject")?;
    for row in rows {
        writeln!(out, "{},{:?},{}", row.time, row.kind, row.subject)?;
    }
    Ok(())
}
