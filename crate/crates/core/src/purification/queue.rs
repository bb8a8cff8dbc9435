//! Queue-based purifier: a depth-`n` purification tree built from `n`
//! purifier stations, one per level, each fed FIFO by the level below.

use serde::{Deserialize, Serialize};

use super::PurifyError;
use crate::fidelity::DistanceCells;
use crate::params::OperationTimes;

/// One purification round between endpoints `d` cells apart.
///
/// `t_prfy` covers the local two-qubit gate, measurement and bit exchange;
/// the classical bit additionally travels `d` cells.
pub fn purify_round_latency(d: DistanceCells, t: &OperationTimes) -> f64 {
    t.t_prfy + t.t_cb * d.cells() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueuePurifierModel {
    pub depth: usize,
    /// Latency of one purification at any level, in microseconds.
    pub round_latency: f64,
}

impl QueuePurifierModel {
    pub fn new(depth: usize, d: DistanceCells, t: &OperationTimes) -> Result<Self, PurifyError> {
        if depth == 0 {
            return Err(PurifyError::RoundMismatch {
                rounds: 0,
                available: 0,
                what: "queue purifier needs at least one level",
            });
        }
        Ok(Self {
            depth,
            round_latency: purify_round_latency(d, t),
        })
    }

    /// Highest raw-pair rate one queue can absorb: its first level consumes
    /// two pairs per round.
    pub fn max_input_rate(&self) -> f64 {
        2.0 / self.round_latency
    }
}

/// Steady-state interval between delivered pairs, in microseconds.
///
/// `success[k]` is the success probability at level `k`; its length is the
/// number of rounds performed and may not exceed the model depth. Each
/// level processes at most one purification per round latency, so a
/// saturated level caps the rate passed upward.
pub fn queue_purifier_latency(
    incoming_rate: f64,
    success: &[f64],
    model: &QueuePurifierModel,
) -> Result<f64, PurifyError> {
    if incoming_rate <= 0.0 {
        return Err(PurifyError::Starvation);
    }
    if success.len() > model.depth {
        return Err(PurifyError::RoundMismatch {
            rounds: success.len(),
            available: model.depth,
            what: "queue purifier levels",
        });
    }
    let mut rate = incoming_rate;
    for &p in success {
        let processed = rate.min(model.max_input_rate());
        rate = processed / 2.0 * p;
    }
    if rate <= 0.0 {
        return Err(PurifyError::Starvation);
    }
    let interval = 1.0 / rate;
    Ok(if success.is_empty() {
        interval
    } else {
        interval.max(model.round_latency)
    })
}

/// Discrete FIFO queue purifier. Holds per-level queue state between
/// calls; confined to one simulation thread.
#[derive(Debug, Clone)]
pub struct QueuePurifier {
    model: QueuePurifierModel,
    /// Per level: the unmatched pair waiting for a partner, and when the
    /// station frees up.
    waiting: Vec<Option<f64>>,
    free_at: Vec<f64>,
    delivered: Vec<f64>,
    attempts: Vec<u64>,
}

impl QueuePurifier {
    pub fn new(model: QueuePurifierModel) -> Self {
        Self {
            waiting: vec![None; model.depth],
            free_at: vec![0.0; model.depth],
            delivered: Vec::new(),
            attempts: vec![0; model.depth],
            model,
        }
    }

    /// Feeds one raw pair arriving at `time` (non-decreasing across calls).
    /// `outcome(level)` decides whether the purification at that level
    /// succeeds; failed rounds discard both pairs and the level waits for
    /// fresh input.
    pub fn push(&mut self, time: f64, rounds: usize, outcome: &mut impl FnMut(usize) -> bool) {
        assert!(rounds <= self.model.depth, "rounds exceed purifier depth");
        self.push_level(0, time, rounds, outcome);
    }

    fn push_level(&mut self, level: usize, time: f64, rounds: usize, outcome: &mut impl FnMut(usize) -> bool) {
        if level == rounds {
            self.delivered.push(time);
            return;
        }
        match self.waiting[level].take() {
            None => self.waiting[level] = Some(time),
            Some(first) => {
                let start = first.max(time).max(self.free_at[level]);
                let done = start + self.model.round_latency;
                self.free_at[level] = done;
                self.attempts[level] += 1;
                if outcome(level) {
                    self.push_level(level + 1, done, rounds, outcome);
                }
            }
        }
    }

    pub fn delivered(&self) -> &[f64] {
        &self.delivered
    }

    pub fn attempts(&self) -> &[u64] {
        &self.attempts
    }
}
