//! Ballistic movement vs teleportation for a single qubit.
//!
//! cargo run --example fidelity_models

use qnet::fidelity::{
    ballistic_fidelity, ballistic_latency, crossover_distance, link_fidelity, teleport_fidelity, teleport_latency,
};
use qnet::{DistanceCells, Fidelity};

fn main() {
    let params = qnet::default_ion_trap();
    let crossover = crossover_distance(&params.times).expect("t_mv > t_cb");
    println!("teleport beats ballistic latency from {} cells", crossover.cells());
    println!("{:>7} {:>12} {:>10} {:>12} {:>10}", "cells", "moved 1-F", "moved us", "sent 1-F", "sent us");
    for cells in [0, 100, 300, 600, 617, 1200, 2400, 6000] {
        let d = DistanceCells(cells);
        let moved = ballistic_fidelity(Fidelity::ONE, d, &params.errors);
        let sent = teleport_fidelity(Fidelity::ONE, link_fidelity(&params, d), &params.errors);
        println!(
            "{cells:>7} {:>12.3e} {:>10.1} {:>12.3e} {:>10.1}",
            moved.error(),
            ballistic_latency(d, &params.times),
            sent.error(),
            teleport_latency(d, &params.times),
        );
    }
}
