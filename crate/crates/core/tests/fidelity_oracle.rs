use nalgebra::{Complex, DMatrix, DVector};
use num::{BigInt, BigRational, One, ToPrimitive};
use proptest::prelude::*;
use qnet::fidelity::teleport_fidelity;
use qnet::{ErrorRates, Fidelity};

type C = Complex<f64>;
type M = DMatrix<C>;

fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn exact_teleport_error(p_1q: &BigRational, p_2q: &BigRational, p_ms: &BigRational) -> BigRational {
    let one = BigRational::one();
    let eta = &one - p_ms;
    let gates = (&one - p_1q) * (&one - p_2q);
    let measure = (ratio(4, 1) * &eta * &eta - &one) / ratio(3, 1);
    let f = ratio(1, 4) * (&one + ratio(3, 1) * gates * measure);
    one - f
}

#[test]
fn teleport_error_at_defaults_is_exact() {
    let exact = exact_teleport_error(&ratio(1, 100_000_000), &ratio(1, 10_000_000), &ratio(1, 100_000_000));
    let exact_f = exact.to_f64().unwrap();
    let p = qnet::default_ion_trap().errors;
    let computed = teleport_fidelity(Fidelity::ONE, Fidelity::ONE, &p).error();
    assert!((computed - exact_f).abs() < 1e-15, "{computed:e} vs {exact_f:e}");
    // 1.025e-7 less a term of order 1e-15.
    assert!(exact < ratio(1025, 10_000_000_000));
    assert!(ratio(1025, 10_000_000_000) - &exact < ratio(1, 100_000_000_000_000));
}

fn c(re: f64) -> C {
    C::new(re, 0.0)
}

fn pauli(k: usize) -> M {
    let z = c(0.0);
    let o = c(1.0);
    match k {
        0 => M::from_row_slice(2, 2, &[o, z, z, o]),
        1 => M::from_row_slice(2, 2, &[z, o, o, z]),
        2 => M::from_row_slice(2, 2, &[z, C::new(0.0, -1.0), C::new(0.0, 1.0), z]),
        _ => M::from_row_slice(2, 2, &[o, z, z, c(-1.0)]),
    }
}

fn kron_all(ops: &[M]) -> M {
    ops.iter().skip(1).fold(ops[0].clone(), |acc, op| acc.kronecker(op))
}

fn bell_plus() -> DVector<C> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    DVector::from_vec(vec![c(h), c(0.0), c(0.0), c(h)])
}

fn werner(f: f64) -> M {
    let phi = bell_plus();
    let proj = &phi * phi.adjoint();
    let rest = M::identity(4, 4) - &proj;
    proj * c(f) + rest * c((1.0 - f) / 3.0)
}

/// CNOT on a 4-qubit register ordered (R, Q, A, B), R most significant.
fn cnot(control: usize, target: usize) -> M {
    let mut m = M::zeros(16, 16);
    for i in 0..16 {
        let bit = |q: usize| 3 - q;
        let j = if i >> bit(control) & 1 == 1 { i ^ (1 << bit(target)) } else { i };
        m[(j, i)] = c(1.0);
    }
    m
}

fn conj(op: &M, rho: &M) -> M {
    op * rho * op.adjoint()
}

/// Teleports Q into B with Q entangled with R, and returns the R-B pair
/// fidelity. Depolarizing noise acts on the CNOT and the Hadamard; each
/// measured bit flips with probability `p_ms`.
fn teleport_circuit(f_old: f64, f_epr: f64, p_1q: f64, p_2q: f64, p_ms: f64) -> f64 {
    let id = pauli(0);
    let mut rho = werner(f_old).kronecker(&werner(f_epr));

    rho = conj(&cnot(1, 2), &rho);
    let mut mixed = M::zeros(16, 16);
    for a in 0..4 {
        for b in 0..4 {
            mixed += conj(&kron_all(&[id.clone(), pauli(a), pauli(b), id.clone()]), &rho);
        }
    }
    rho = rho * c(1.0 - p_2q) + mixed * c(p_2q / 16.0);

    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = M::from_row_slice(2, 2, &[c(s), c(s), c(s), c(-s)]);
    rho = conj(&kron_all(&[id.clone(), h, id.clone(), id.clone()]), &rho);
    let mut mixed = M::zeros(16, 16);
    for a in 0..4 {
        mixed += conj(&kron_all(&[id.clone(), pauli(a), id.clone(), id.clone()]), &rho);
    }
    rho = rho * c(1.0 - p_1q) + mixed * c(p_1q / 4.0);

    let ket = |b: usize| {
        let mut m = M::zeros(2, 2);
        m[(b, b)] = c(1.0);
        m
    };
    let mut out = M::zeros(16, 16);
    for m1 in 0..2 {
        for m2 in 0..2 {
            let proj = kron_all(&[id.clone(), ket(m1), ket(m2), id.clone()]);
            let branch = conj(&proj, &rho);
            for r1 in 0..2 {
                for r2 in 0..2 {
                    let w = if r1 == m1 { 1.0 - p_ms } else { p_ms } * if r2 == m2 { 1.0 - p_ms } else { p_ms };
                    let fix = pauli(if r1 == 1 { 3 } else { 0 }) * pauli(if r2 == 1 { 1 } else { 0 });
                    let corr = kron_all(&[id.clone(), id.clone(), id.clone(), fix]);
                    out += conj(&corr, &branch) * c(w);
                }
            }
        }
    }

    let mut fidelity = 0.0;
    for q in 0..2 {
        for a in 0..2 {
            let mut v = DVector::<C>::zeros(16);
            v[q << 2 | a << 1] = c(std::f64::consts::FRAC_1_SQRT_2);
            v[8 | q << 2 | a << 1 | 1] = c(std::f64::consts::FRAC_1_SQRT_2);
            fidelity += (v.adjoint() * &out * &v)[(0, 0)].re;
        }
    }
    fidelity
}

#[test]
fn noiseless_circuit_transfers_pair_fidelity() {
    let f = teleport_circuit(1.0, 0.9, 0.0, 0.0, 0.0);
    assert!((f - 0.9).abs() < 1e-12);
    let f = teleport_circuit(0.8, 0.7, 0.0, 0.0, 0.0);
    let model = teleport_fidelity(Fidelity::new(0.8), Fidelity::new(0.7), &ErrorRates::zero()).value();
    assert!((f - model).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn model_matches_circuit_without_single_qubit_noise(
        f_old in 0.3f64..1.0,
        f_epr in 0.3f64..1.0,
        p_2q in 0.0f64..0.1,
        p_ms in 0.0f64..0.1,
    ) {
        let p = ErrorRates { p_1q: 0.0, p_2q, p_mv: 0.0, p_ms };
        let model = teleport_fidelity(Fidelity::new(f_old), Fidelity::new(f_epr), &p).value();
        let circuit = teleport_circuit(f_old, f_epr, 0.0, p_2q, p_ms);
        prop_assert!((model - circuit).abs() < 1e-12, "{} vs {}", model, circuit);
    }

    #[test]
    fn model_is_conservative_for_single_qubit_noise(
        f_epr in 0.5f64..1.0,
        p_1q in 1e-4f64..0.1,
    ) {
        let p = ErrorRates { p_1q, p_2q: 0.0, p_mv: 0.0, p_ms: 0.0 };
        let model = teleport_fidelity(Fidelity::ONE, Fidelity::new(f_epr), &p).value();
        let circuit = teleport_circuit(1.0, f_epr, p_1q, 0.0, 0.0);
        prop_assert!(model <= circuit + 1e-12);
        // The circuit only loses the X/Y half of the Hadamard errors.
        let expected = 0.25 * (1.0 + (4.0 * f_epr - 1.0) * (1.0 - 2.0 * p_1q / 3.0));
        prop_assert!((circuit - expected).abs() < 1e-12);
    }
}
