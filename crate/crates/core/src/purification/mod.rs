//! DEJMPS and BBPSSW recurrence purification under noisy local operations.
//!
//! Noise model shared by the closed forms and the density-matrix oracle:
//! every two-qubit gate is followed by two-qubit depolarizing noise with
//! probability `p_2q`, every one-qubit gate by one-qubit depolarizing noise
//! with `p_1q`, and every measurement reports the wrong bit with `p_ms`.
//! BBPSSW inputs are twirled to Werner form before the round; the twirl is
//! a classical randomization and adds no gate noise.

mod oracle;
mod queue;

pub use oracle::{oracle_purify, OracleOutcome};
pub use queue::{
    purify_round_latency, queue_purifier_latency, QueuePurifier, QueuePurifierModel,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fidelity::Fidelity;
use crate::params::ErrorRates;

/// Tolerance on the coefficient sum of a Bell-diagonal state.
pub const NORM_TOLERANCE: f64 = 1e-12;
/// Fixpoint iteration stops when successive fidelities differ by less.
pub const FIXPOINT_TOLERANCE: f64 = 1e-12;
pub const MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Dejmps,
    Bbpssw,
}

impl std::str::FromStr for Protocol {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dejmps" => Ok(Protocol::Dejmps),
            "bbpssw" => Ok(Protocol::Bbpssw),
            other => Err(format!("unknown protocol `{other}` (dejmps|bbpssw)")),
        }
    }
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Protocol::Dejmps => "dejmps",
            Protocol::Bbpssw => "bbpssw",
        })
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PurifyError {
    #[error("state is not purifiable: {0}")]
    NotPurifiable(String),
    #[error("invalid Bell-diagonal coefficients {0:?}")]
    InvalidState([f64; 4]),
    #[error("fixpoint iteration did not converge; last iterates {trace:?}")]
    NoConvergence { trace: Vec<f64> },
    #[error("purifier starved: incoming pair rate is zero")]
    Starvation,
    #[error("{rounds} rounds requested but {available} given ({what})")]
    RoundMismatch {
        rounds: usize,
        available: usize,
        what: &'static str,
    },
}

/// Mixed state diagonal in the Bell basis.
///
/// Coefficient order is `(Phi+, Psi-, Psi+, Phi-)`; `a` is the fidelity
/// with the target `Phi+` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellDiagonalState {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl BellDiagonalState {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self, PurifyError> {
        let coeffs = [a, b, c, d];
        let sum: f64 = coeffs.iter().sum();
        if coeffs.iter().any(|&x| x < 0.0 || !x.is_finite())
            || (sum - 1.0).abs() > NORM_TOLERANCE
        {
            return Err(PurifyError::InvalidState(coeffs));
        }
        Ok(Self { a, b, c, d })
    }

    pub fn from_array(v: [f64; 4]) -> Result<Self, PurifyError> {
        Self::new(v[0], v[1], v[2], v[3])
    }

    /// Werner form: the three error components share `1 - f` equally.
    pub fn werner(f: Fidelity) -> Self {
        let e = f.error() / 3.0;
        Self {
            a: f.value(),
            b: e,
            c: e,
            d: e,
        }
    }

    pub fn perfect() -> Self {
        Self::werner(Fidelity::ONE)
    }

    pub fn fidelity(&self) -> Fidelity {
        Fidelity::new(self.a)
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    /// Rescale so the coefficients sum to one.
    fn normalized(v: [f64; 4]) -> Self {
        let n: f64 = v.iter().sum();
        Self {
            a: v[0] / n,
            b: v[1] / n,
            c: v[2] / n,
            d: v[3] / n,
        }
    }
}

/// Isotropic two-qubit state of fidelity `f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WernerState {
    pub f: Fidelity,
}

impl WernerState {
    pub fn new(f: Fidelity) -> Result<Self, PurifyError> {
        if f.value() < 0.25 {
            return Err(PurifyError::NotPurifiable(format!(
                "Werner fidelity {} below the fully mixed value 1/4",
                f.value()
            )));
        }
        Ok(Self { f })
    }

    pub fn as_bell_diagonal(self) -> BellDiagonalState {
        BellDiagonalState::werner(self.f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PurifyOutcome<S> {
    pub state: S,
    pub p_success: f64,
}

// Bell labels as (phase, parity) bits. Bilateral CNOT maps
// (ph1, pa1), (ph2, pa2) -> (ph1 ^ ph2, pa1), (ph2, pa1 ^ pa2).
const PHI_PLUS: usize = 0b00;
const PHI_MINUS: usize = 0b10;
const PSI_PLUS: usize = 0b01;
const PSI_MINUS: usize = 0b11;

fn to_labels(s: &BellDiagonalState) -> [f64; 4] {
    let mut l = [0.0; 4];
    l[PHI_PLUS] = s.a;
    l[PSI_MINUS] = s.b;
    l[PSI_PLUS] = s.c;
    l[PHI_MINUS] = s.d;
    l
}

fn from_labels(l: [f64; 4]) -> [f64; 4] {
    [l[PHI_PLUS], l[PSI_MINUS], l[PSI_PLUS], l[PHI_MINUS]]
}

/// One purification step on two identical input pairs, in label space.
///
/// Depolarizing noise is a uniform Pauli mixture, and Pauli errors on
/// Bell-diagonal pairs only permute labels, so the whole circuit reduces
/// to arithmetic on the 16 joint label probabilities.
fn noisy_round(input: &BellDiagonalState, rotate: bool, p: &ErrorRates) -> ([f64; 4], f64) {
    let mut r = to_labels(input);
    if rotate {
        // Alice Rx(pi/2), Bob Rx(-pi/2): swaps the Psi- and Phi- weights.
        r.swap(PSI_MINUS, PHI_MINUS);
        let keep = (1.0 - p.p_1q).powi(2);
        for x in r.iter_mut() {
            *x = keep * *x + (1.0 - keep) / 4.0;
        }
    }
    let keep2 = (1.0 - p.p_2q).powi(2);
    let flip = 2.0 * p.p_ms * (1.0 - p.p_ms);
    let mut out = [0.0; 4];
    for (label, slot) in out.iter_mut().enumerate() {
        let phase = label >> 1;
        let parity = label & 1;
        let mut acc = 0.0;
        for ph1 in 0..2 {
            let ph2 = phase ^ ph1;
            for pa2 in 0..2 {
                let accept = if pa2 == parity { 1.0 - flip } else { flip };
                acc += r[(ph1 << 1) | parity] * r[(ph2 << 1) | pa2] * accept;
            }
        }
        // The depolarized branch is uniform over the 16 joint labels and
        // passes the parity check with probability 1/2.
        *slot = keep2 * acc + (1.0 - keep2) / 8.0;
    }
    let n: f64 = out.iter().sum();
    (from_labels(out), n)
}

/// One BBPSSW round on two copies of `s`.
pub fn bbpssw_round(
    s: WernerState,
    p: &ErrorRates,
) -> Result<PurifyOutcome<WernerState>, PurifyError> {
    if s.f.value() <= 0.25 {
        return Err(PurifyError::NotPurifiable(format!(
            "Werner fidelity {} is at or below the 1/4 fixed point",
            s.f.value()
        )));
    }
    let (out, n) = noisy_round(&s.as_bell_diagonal(), false, p);
    Ok(PurifyOutcome {
        state: WernerState {
            f: Fidelity::new(out[0] / n),
        },
        p_success: n,
    })
}

/// One DEJMPS round on two copies of `s`.
pub fn dejmps_round(
    s: BellDiagonalState,
    p: &ErrorRates,
) -> Result<PurifyOutcome<BellDiagonalState>, PurifyError> {
    if !(s.a > s.b && s.a > s.c && s.a > s.d) {
        return Err(PurifyError::NotPurifiable(format!(
            "Phi+ weight {} is not dominant in {:?}",
            s.a,
            s.to_array()
        )));
    }
    let (out, n) = noisy_round(&s, true, p);
    Ok(PurifyOutcome {
        state: BellDiagonalState::normalized(out),
        p_success: n,
    })
}

impl Protocol {
    /// One round expressed on Bell-diagonal states; BBPSSW twirls its
    /// input and returns Werner form.
    pub fn round(
        self,
        s: BellDiagonalState,
        p: &ErrorRates,
    ) -> Result<PurifyOutcome<BellDiagonalState>, PurifyError> {
        match self {
            Protocol::Dejmps => dejmps_round(s, p),
            Protocol::Bbpssw => {
                let w = WernerState::new(s.fidelity())?;
                let out = bbpssw_round(w, p)?;
                Ok(PurifyOutcome {
                    state: out.state.as_bell_diagonal(),
                    p_success: out.p_success,
                })
            }
        }
    }
}

/// Fidelity and success probability after each round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub start: Fidelity,
    /// `(fidelity after round, success probability of that round)`.
    pub rounds: Vec<(Fidelity, f64)>,
}

impl Trajectory {
    pub fn final_fidelity(&self) -> Fidelity {
        self.rounds.last().map(|r| r.0).unwrap_or(self.start)
    }

    pub fn success(&self) -> Vec<f64> {
        self.rounds.iter().map(|r| r.1).collect()
    }
}

/// Iterates `rounds` rounds from a Werner input of fidelity `f_in`.
pub fn trajectory(
    f_in: Fidelity,
    protocol: Protocol,
    p: &ErrorRates,
    rounds: usize,
) -> Result<Trajectory, PurifyError> {
    let mut state = BellDiagonalState::werner(f_in);
    let mut out = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let step = protocol.round(state, p)?;
        state = step.state;
        out.push((state.fidelity(), step.p_success));
    }
    Ok(Trajectory {
        start: f_in,
        rounds: out,
    })
}

/// Rounds needed to lift a pair to a target fidelity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurificationSchedule {
    pub rounds: usize,
    pub success: Vec<f64>,
    pub fidelity: Fidelity,
}

impl PurificationSchedule {
    /// Expected raw pairs per delivered pair.
    pub fn expected_pairs(&self) -> f64 {
        expected_pairs(&self.success)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Reach {
    Reached(PurificationSchedule),
    /// The recurrence stalls (or stops purifying) below the target.
    Unreachable { ceiling: Fidelity },
}

impl Reach {
    pub fn schedule(&self) -> Option<&PurificationSchedule> {
        match self {
            Reach::Reached(s) => Some(s),
            Reach::Unreachable { .. } => None,
        }
    }

    pub fn rounds(&self) -> Option<usize> {
        self.schedule().map(|s| s.rounds)
    }
}

/// Minimal rounds taking a Werner pair of fidelity `f_in` to `f_target`.
pub fn rounds_to_threshold(
    f_in: Fidelity,
    protocol: Protocol,
    p: &ErrorRates,
    f_target: Fidelity,
) -> Reach {
    let mut state = BellDiagonalState::werner(f_in);
    let mut success = Vec::new();
    for _ in 0..MAX_ITERATIONS {
        if state.a >= f_target.value() {
            return Reach::Reached(PurificationSchedule {
                rounds: success.len(),
                success,
                fidelity: state.fidelity(),
            });
        }
        let Ok(step) = protocol.round(state, p) else {
            return Reach::Unreachable {
                ceiling: state.fidelity(),
            };
        };
        let gain = step.state.a - state.a;
        if gain < FIXPOINT_TOLERANCE && step.state.a < f_target.value() {
            return Reach::Unreachable {
                ceiling: state.fidelity().max_by(step.state.fidelity()),
            };
        }
        success.push(step.p_success);
        state = step.state;
    }
    Reach::Unreachable {
        ceiling: state.fidelity(),
    }
}

impl Fidelity {
    fn max_by(self, other: Fidelity) -> Fidelity {
        if other > self {
            other
        } else {
            self
        }
    }
}

/// Iterates until successive fidelities agree to [`FIXPOINT_TOLERANCE`].
fn converge(
    start: BellDiagonalState,
    protocol: Protocol,
    p: &ErrorRates,
) -> Result<Vec<Fidelity>, PurifyError> {
    let mut state = start;
    let mut iterates = vec![state.fidelity()];
    for _ in 0..MAX_ITERATIONS {
        let next = protocol.round(state, p)?.state;
        iterates.push(next.fidelity());
        if (next.a - state.a).abs() < FIXPOINT_TOLERANCE {
            return Ok(iterates);
        }
        state = next;
    }
    let trace = iterates.iter().rev().take(8).map(|f| f.value()).collect();
    Err(PurifyError::NoConvergence { trace })
}

/// Fixpoint of the noisy recurrence, iterated from a Werner pair at 0.99.
pub fn max_achievable_fidelity(protocol: Protocol, p: &ErrorRates) -> Result<Fidelity, PurifyError> {
    let iterates = converge(BellDiagonalState::werner(Fidelity::new(0.99)), protocol, p)?;
    Ok(*iterates.last().expect("at least one iterate"))
}

/// Rounds until the error `1 - F` is within `rel_tol` of the error at the
/// trajectory's own fixpoint. Returns `(rounds, fixpoint)`.
pub fn rounds_to_converge(
    f_in: Fidelity,
    protocol: Protocol,
    p: &ErrorRates,
    rel_tol: f64,
) -> Result<(usize, Fidelity), PurifyError> {
    let iterates = converge(BellDiagonalState::werner(f_in), protocol, p)?;
    let fix = *iterates.last().expect("non-empty");
    let rounds = iterates
        .iter()
        .position(|f| (f.error() - fix.error()).abs() <= rel_tol * fix.error())
        .expect("the last iterate always qualifies");
    Ok((rounds, fix))
}

/// Expected raw pairs per output pair: product of `2 / p_success`.
pub fn expected_pairs(success: &[f64]) -> f64 {
    success.iter().map(|p| 2.0 / p).product()
}

pub fn expected_pairs_for_rounds(rounds: usize, success: &[f64]) -> Result<f64, PurifyError> {
    if success.len() < rounds {
        return Err(PurifyError::RoundMismatch {
            rounds,
            available: success.len(),
            what: "success probabilities",
        });
    }
    Ok(expected_pairs(&success[..rounds]))
}
