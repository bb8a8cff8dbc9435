//! Error accumulation along repeated teleports.
//!
//! cargo run --example teleport_chain [hops]

use qnet::fidelity::{chained_teleport_fidelity, link_fidelity};
use qnet::{DistanceCells, Fidelity};

fn main() {
    let hops: u32 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(64);
    let params = qnet::default_ion_trap();
    let link = link_fidelity(&params, DistanceCells(600));
    let one = chained_teleport_fidelity(Fidelity::ONE, 1, link, &params.errors).error();
    let mut h = 1;
    while h <= hops {
        let e = chained_teleport_fidelity(Fidelity::ONE, h, link, &params.errors).error();
        println!("{h:>4} hops  1-F {e:.4e}  x{:.2}", e / one);
        h *= 2;
    }
}
