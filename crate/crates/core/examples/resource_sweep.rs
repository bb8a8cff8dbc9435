//! Resource-allocation sweep for the 16x16 QFT, normalized to t=g=p=1024.
//!
//! cargo run --release --example resource_sweep

use qnet::simulator::{run_with, SimConfig};
use qnet::topology::{build_mesh, LqCapacity, MeshSpec};
use qnet::workloads::{placement_for, qft_pattern};

fn makespan(capacity: LqCapacity, t: usize, g: usize, p: usize) -> f64 {
    let params = qnet::default_ion_trap();
    let spec = MeshSpec { t, g, p, lq_capacity: capacity, ..MeshSpec::default() };
    let layout = build_mesh(spec, &params).expect("valid mesh");
    let stream = qft_pattern(256).expect("valid size");
    let placement = placement_for(256, &layout).expect("fits");
    run_with(&stream, &placement, &layout, &params, &SimConfig::default()).expect("runs").0.makespan
}

fn main() {
    for capacity in [LqCapacity::HomeBase, LqCapacity::Mobile] {
        let base = makespan(capacity, 1024, 1024, 1024);
        println!("{capacity}: baseline {base:.4e} us");
        for k in [2, 4, 8, 16, 32, 64, 128, 256, 512, 1024] {
            println!("  t=g=p={k:<5} {:.3}", makespan(capacity, k, k, k) / base);
        }
        for t in [2, 4, 8, 16, 32] {
            let row: Vec<String> = [1, 2, 4, 8]
                .iter()
                .filter(|&&r| t % r == 0)
                .map(|&r| format!("{r}p:{:.3}", makespan(capacity, t, t, t / r) / base))
                .collect();
            println!("  t=g={t:<3} {}", row.join("  "));
        }
    }
}
