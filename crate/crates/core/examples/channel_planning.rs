//! Pair cost of a logical channel under each purification placement.
//!
//! cargo run --example channel_planning

use qnet::channel::{distance_sweep, PlacementScheme, PlannerConfig};
use qnet::DistanceCells;

fn main() {
    let params = qnet::default_ion_trap();
    let config = PlannerConfig::default();
    let distances: Vec<DistanceCells> = [1, 4, 16, 32, 64].iter().map(|h| DistanceCells(h * 600)).collect();
    for scheme in PlacementScheme::ALL {
        println!("{scheme}");
        for plan in distance_sweep(scheme, &params, &distances, &config).expect("plans") {
            if !plan.is_feasible() {
                println!("  {:>3} hops  infeasible at {:?}", plan.hops, plan.infeasible);
                continue;
            }
            println!(
                "  {:>3} hops  rounds w/b/e {}/{}/{}  total {:>9.1}  teleported {:>7.1}  setup {:>8.1} us",
                plan.hops,
                plan.rounds_wire,
                plan.rounds_between,
                plan.rounds_endpoint,
                plan.total_pairs * 49.0,
                plan.nonlocal_pairs * 49.0,
                plan.setup_latency,
            );
        }
    }
}
