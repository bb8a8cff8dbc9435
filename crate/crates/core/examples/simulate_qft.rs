//! Runs the 256-qubit QFT on a 16x16 mesh in both layouts.
//!
//! cargo run --release --example simulate_qft -- [t g p]

use std::time::Instant;

use qnet::simulator::{run_with, SimConfig};
use qnet::topology::{build_mesh, LqCapacity, MeshSpec};
use qnet::workloads::{placement_for, qft_pattern};

fn main() {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let (t, g, p) = match args.as_slice() {
        [t, g, p] => (*t, *g, *p),
        _ => (4, 4, 1),
    };
    let params = qnet::default_ion_trap();
    let stream = qft_pattern(256).expect("valid size");
    for capacity in [LqCapacity::HomeBase, LqCapacity::Mobile] {
        let spec = MeshSpec { t, g, p, lq_capacity: capacity, ..MeshSpec::default() };
        let layout = build_mesh(spec, &params).expect("valid mesh");
        let placement = placement_for(256, &layout).expect("fits");
        let clock = Instant::now();
        let (report, _) = run_with(&stream, &placement, &layout, &params, &SimConfig::default()).expect("runs");
        println!(
            "{capacity:<10} t={t} g={g} p={p}: makespan {:.3e} us, {} channels, mean teleporter use {:.3}, mean purifier use {:.3} ({:.1?})",
            report.makespan,
            report.channels,
            report.utilization.teleporter.mean,
            report.utilization.purifier.mean,
            clock.elapsed()
        );
    }
}
