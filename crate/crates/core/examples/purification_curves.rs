//! BBPSSW and DEJMPS trajectories, with the expected raw pair cost.
//!
//! cargo run --example purification_curves [start-fidelity]

use qnet::purification::{max_achievable_fidelity, oracle_purify, rounds_to_threshold, trajectory, BellDiagonalState, Protocol};
use qnet::Fidelity;

fn main() {
    let start: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(0.85);
    let params = qnet::default_ion_trap();
    for protocol in [Protocol::Bbpssw, Protocol::Dejmps] {
        let traj = trajectory(Fidelity::new(start), protocol, &params.errors, 8).expect("valid start");
        let ceiling = max_achievable_fidelity(protocol, &params.errors).expect("converges");
        println!("{protocol}: fixpoint 1-F = {:.3e}", ceiling.error());
        let mut pairs = 1.0;
        for (i, (f, p)) in traj.rounds.iter().enumerate() {
            pairs *= 2.0 / p;
            println!("  round {}  1-F {:.3e}  success {:.4}  pairs {:.1}", i + 1, f.error(), p, pairs);
        }
        match rounds_to_threshold(Fidelity::new(start), protocol, &params.errors, Fidelity::new(params.threshold.f_min)).schedule() {
            Some(s) => println!("  threshold after {} rounds, {:.1} raw pairs", s.rounds, s.expected_pairs()),
            None => println!("  threshold unreachable"),
        }
    }

    // One round against the density-matrix circuit.
    let w = BellDiagonalState::werner(Fidelity::new(start)).to_array();
    let fast = Protocol::Dejmps.round(BellDiagonalState::werner(Fidelity::new(start)), &params.errors).unwrap();
    let slow = oracle_purify(w, w, Protocol::Dejmps, &params.errors).unwrap();
    println!("recurrence {:.12}  circuit {:.12}", fast.state.fidelity().value(), slow.coefficients[0]);
}
