//! How the teleported-pair need of a 16-hop channel grows with the error rate.
//!
//! cargo run --example sensitivity

use qnet::channel::{error_rate_sensitivity, PlacementScheme, PlannerConfig};
use qnet::DistanceCells;

fn main() {
    let params = qnet::default_ion_trap();
    let grid = [1e-9, 1e-8, 1e-7, 1e-6, 3e-6, 1e-5, 3e-5, 1e-4];
    for scheme in [PlacementScheme::EndpointsOnly, PlacementScheme::VirtualWirePlusEndpoints] {
        println!("{scheme}");
        let rows = error_rate_sensitivity(&params, &grid, scheme, DistanceCells(16 * 600), &PlannerConfig::default())
            .expect("sweep");
        for row in rows {
            if row.breakdown() {
                println!("  p={:.0e}  breaks down (fixpoint 1-F {:.2e})", row.rate, row.ceiling.error());
            } else {
                println!("  p={:.0e}  {:>8.1} teleported pairs per logical qubit", row.rate, row.plan.nonlocal_pairs * 49.0);
            }
        }
    }
}
