//! Exact density-matrix simulation of one purification step on two pairs.
//!
//! Qubit order in the 16-dimensional register is `A1 B1 A2 B2` (most
//! significant first): pair 1 is kept, pair 2 is measured. This module
//! shares nothing with the closed-form recurrences beyond the noise model
//! definition, so it serves as their reference.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{Complex, SMatrix};

use super::{BellDiagonalState, Protocol, PurifyError};
use crate::params::ErrorRates;

type C = Complex<f64>;
type Op2 = SMatrix<C, 2, 2>;
type Op4 = SMatrix<C, 4, 4>;
type Op16 = SMatrix<C, 16, 16>;

const A1: usize = 0;
const B1: usize = 1;
const A2: usize = 2;
const B2: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOutcome {
    /// Bell-basis weights `(Phi+, Psi-, Psi+, Phi-)` of the kept pair,
    /// normalized to the accepted branch.
    pub coefficients: [f64; 4],
    pub p_success: f64,
}

fn c(re: f64) -> C {
    C::new(re, 0.0)
}

fn paulis() -> [Op2; 4] {
    let i = C::new(0.0, 1.0);
    [
        Op2::identity(),
        Op2::new(c(0.0), c(1.0), c(1.0), c(0.0)),
        Op2::new(c(0.0), -i, i, c(0.0)),
        Op2::new(c(1.0), c(0.0), c(0.0), c(-1.0)),
    ]
}

/// Lifts a one-qubit operator onto `qubit` of the four-qubit register.
fn embed(op: &Op2, qubit: usize) -> Op16 {
    let mut out = Op16::zeros();
    for row in 0..16usize {
        for col in 0..16usize {
            let mut v = c(1.0);
            for q in 0..4 {
                let shift = 3 - q;
                let r = (row >> shift) & 1;
                let cc = (col >> shift) & 1;
                let m = if q == qubit { op[(r, cc)] } else if r == cc { c(1.0) } else { c(0.0) };
                v *= m;
                if v == c(0.0) {
                    break;
                }
            }
            out[(row, col)] = v;
        }
    }
    out
}

fn cnot(control: usize, target: usize) -> Op16 {
    let mut out = Op16::zeros();
    for col in 0..16usize {
        let cbit = (col >> (3 - control)) & 1;
        let row = if cbit == 1 { col ^ (1 << (3 - target)) } else { col };
        out[(row, col)] = c(1.0);
    }
    out
}

fn conjugate(u: &Op16, rho: &Op16) -> Op16 {
    u * rho * u.adjoint()
}

fn depolarize(rho: &Op16, qubits: &[usize], p: f64) -> Op16 {
    if p == 0.0 {
        return *rho;
    }
    let paulis = paulis();
    let count = 4usize.pow(qubits.len() as u32);
    let mut mixed = Op16::zeros();
    for k in 0..count {
        let mut op = Op16::identity();
        let mut idx = k;
        for &q in qubits {
            op = embed(&paulis[idx % 4], q) * op;
            idx /= 4;
        }
        mixed += conjugate(&op, rho);
    }
    rho * c(1.0 - p) + mixed * c(p / count as f64)
}

/// Bell vectors on two qubits in `(Phi+, Psi-, Psi+, Phi-)` order.
fn bell_vectors() -> [[C; 4]; 4] {
    let h = c(FRAC_1_SQRT_2);
    let z = c(0.0);
    [
        [h, z, z, h],  // Phi+
        [z, h, -h, z], // Psi-
        [z, h, h, z],  // Psi+
        [h, z, z, -h], // Phi-
    ]
}

fn bell_diagonal(coeffs: &[f64; 4]) -> Op4 {
    let mut rho = Op4::zeros();
    for (w, v) in coeffs.iter().zip(bell_vectors()) {
        for r in 0..4 {
            for col in 0..4 {
                rho[(r, col)] += c(*w) * v[r] * v[col].conj();
            }
        }
    }
    rho
}

/// `rho1 (A1 B1) ⊗ rho2 (A2 B2)` in the `A1 B1 A2 B2` ordering.
fn joint(rho1: &Op4, rho2: &Op4) -> Op16 {
    rho1.kronecker(rho2)
}

fn validate(v: &[f64; 4]) -> Result<(), PurifyError> {
    BellDiagonalState::from_array(*v).map(|_| ())
}

/// Simulates one round on `pair1 ⊗ pair2` and post-selects on agreeing
/// (possibly misreported) parity outcomes.
pub fn oracle_purify(
    pair1: [f64; 4],
    pair2: [f64; 4],
    protocol: Protocol,
    p: &ErrorRates,
) -> Result<OracleOutcome, PurifyError> {
    validate(&pair1)?;
    validate(&pair2)?;
    let twirl = |v: [f64; 4]| {
        let e = (1.0 - v[0]) / 3.0;
        [v[0], e, e, e]
    };
    let (in1, in2) = match protocol {
        Protocol::Dejmps => (pair1, pair2),
        Protocol::Bbpssw => (twirl(pair1), twirl(pair2)),
    };
    let mut rho = joint(&bell_diagonal(&in1), &bell_diagonal(&in2));

    if protocol == Protocol::Dejmps {
        let s = c(FRAC_1_SQRT_2);
        let is = C::new(0.0, FRAC_1_SQRT_2);
        let rx_plus = Op2::new(s, -is, -is, s);
        let rx_minus = Op2::new(s, is, is, s);
        for (q, op) in [(A1, rx_plus), (A2, rx_plus), (B1, rx_minus), (B2, rx_minus)] {
            rho = conjugate(&embed(&op, q), &rho);
            rho = depolarize(&rho, &[q], p.p_1q);
        }
    }
    for (control, target) in [(A1, A2), (B1, B2)] {
        rho = conjugate(&cnot(control, target), &rho);
        rho = depolarize(&rho, &[control, target], p.p_2q);
    }

    // Project pair 2 onto each computational outcome and weigh by the
    // probability that the reported bits agree.
    let mut kept = Op4::zeros();
    for ma in 0..2usize {
        for mb in 0..2usize {
            let agree = {
                let f = p.p_ms;
                let same = (1.0 - f) * (1.0 - f) + f * f;
                if ma == mb { same } else { 1.0 - same }
            };
            for r in 0..4usize {
                for col in 0..4usize {
                    let row16 = (r << 2) | (ma << 1) | mb;
                    let col16 = (col << 2) | (ma << 1) | mb;
                    kept[(r, col)] += rho[(row16, col16)] * c(agree);
                }
            }
        }
    }
    let p_success = kept.trace().re;
    let mut coefficients = [0.0; 4];
    for (slot, v) in coefficients.iter_mut().zip(bell_vectors()) {
        let mut acc = C::new(0.0, 0.0);
        for r in 0..4 {
            for col in 0..4 {
                acc += v[r].conj() * kept[(r, col)] * v[col];
            }
        }
        *slot = acc.re / p_success;
    }
    Ok(OracleOutcome {
        coefficients,
        p_success,
    })
}
