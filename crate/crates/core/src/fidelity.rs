//! Closed-form fidelity and latency models for ballistic transport,
//! teleportation, EPR generation and chained teleportation.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::{ErrorRates, OperationTimes, ParameterSet};

/// Overlap with the error-free reference state, in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Fidelity(f64);

impl Fidelity {
    pub const ONE: Fidelity = Fidelity(1.0);
    /// Fully mixed two-qubit state.
    pub const MIXED: Fidelity = Fidelity(0.25);

    /// Clamps into `[0, 1]`; rounding in the recurrences can overshoot by an ulp.
    pub fn new(value: f64) -> Self {
        debug_assert!(value.is_finite(), "fidelity must be finite");
        Fidelity(value.clamp(0.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `1 - F`.
    pub fn error(self) -> f64 {
        1.0 - self.0
    }
}

impl fmt::Display for Fidelity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.error() < 1e-6 {
            write!(f, "1-{:.4e}", self.error())
        } else {
            write!(f, "{:.9}", self.0)
        }
    }
}

/// Count of ion-trap cells.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct DistanceCells(pub u64);

impl DistanceCells {
    pub fn cells(self) -> u64 {
        self.0
    }

    fn as_f64(self) -> f64 {
        self.0 as f64
    }
}

impl std::ops::Add for DistanceCells {
    type Output = DistanceCells;
    fn add(self, rhs: Self) -> Self {
        DistanceCells(self.0 + rhs.0)
    }
}

/// `F_old * (1 - p_mv)^d`.
pub fn ballistic_fidelity(f_old: Fidelity, d: DistanceCells, p: &ErrorRates) -> Fidelity {
    let survive = (d.as_f64() * (-p.p_mv).ln_1p()).exp();
    Fidelity::new(f_old.0 * survive)
}

pub fn ballistic_latency(d: DistanceCells, t: &OperationTimes) -> f64 {
    t.t_mv * d.as_f64()
}

/// Fidelity of a qubit teleported with an EPR pair of fidelity `f_epr`
/// under depolarizing gate noise and noisy measurement.
pub fn teleport_fidelity(f_old: Fidelity, f_epr: Fidelity, p: &ErrorRates) -> Fidelity {
    let gates = (1.0 - p.p_1q) * (1.0 - p.p_2q);
    let eta = 1.0 - p.p_ms;
    let measure = (4.0 * eta * eta - 1.0) / 3.0;
    let signal = (4.0 * f_old.0 - 1.0) * (4.0 * f_epr.0 - 1.0) / 9.0;
    Fidelity::new(0.25 * (1.0 + 3.0 * gates * measure * signal))
}

/// Fidelity of a freshly generated pair; the proportionality constant is 1.
pub fn generation_fidelity(p: &ErrorRates, f_zero: Fidelity) -> Fidelity {
    Fidelity::new((1.0 - p.p_1q) * (1.0 - p.p_2q) * f_zero.0)
}

/// Teleport latency with the EPR pair already at both endpoints; only the
/// two classical correction bits travel `d` cells.
pub fn teleport_latency(d: DistanceCells, t: &OperationTimes) -> f64 {
    2.0 * t.t_1q + t.t_2q + t.t_ms + t.t_cb * d.as_f64()
}

/// Applies [`teleport_fidelity`] `hops` times, each hop assisted by a pair
/// of fidelity `f_link`.
pub fn chained_teleport_fidelity(
    f_initial: Fidelity,
    hops: u32,
    f_link: Fidelity,
    p: &ErrorRates,
) -> Fidelity {
    (0..hops).fold(f_initial, |f, _| teleport_fidelity(f, f_link, p))
}

/// Virtual-wire pair fidelity: generated at a G node midway between two
/// teleporters, each half moved `hop_spacing / 2` cells.
pub fn link_fidelity(params: &ParameterSet, hop_spacing: DistanceCells) -> Fidelity {
    let half = DistanceCells(hop_spacing.0 / 2);
    let rest = DistanceCells(hop_spacing.0 - half.0);
    let gen = generation_fidelity(&params.errors, Fidelity::new(params.f_zero));
    let one_side = ballistic_fidelity(gen, half, &params.errors);
    ballistic_fidelity(one_side, rest, &params.errors)
}

#[derive(Debug, Error, PartialEq)]
pub enum CrossoverError {
    #[error("teleportation never beats ballistic movement: t_mv ({t_mv}) <= t_cb ({t_cb})")]
    NoCrossover { t_mv: f64, t_cb: f64 },
}

/// Smallest distance at which teleporting is strictly faster than moving
/// ballistically.
pub fn crossover_distance(t: &OperationTimes) -> Result<DistanceCells, CrossoverError> {
    let slope = t.t_mv - t.t_cb;
    if slope <= 0.0 {
        return Err(CrossoverError::NoCrossover {
            t_mv: t.t_mv,
            t_cb: t.t_cb,
        });
    }
    let fixed = teleport_latency(DistanceCells(0), t);
    // Closed-form estimate, then settle the boundary against the actual
    // comparison so floating-point rounding cannot shift it by one.
    let mut d = (fixed / slope).floor().max(0.0) as u64;
    let faster = |d: u64| teleport_latency(DistanceCells(d), t) < ballistic_latency(DistanceCells(d), t);
    while d > 0 && faster(d - 1) {
        d -= 1;
    }
    while !faster(d) {
        d += 1;
    }
    Ok(DistanceCells(d))
}
