//! Benchmark instruction streams, placements and their text formats.
//!
//! cargo run --example workloads

use qnet::params::load_config;
use qnet::simulator::schedule;
use qnet::topology::{build_mesh, LqCapacity, MeshSpec};
use qnet::workloads::{benchmark_stream, parse_stream, placement_for, write_stream, Benchmark};

fn main() {
    let params = load_config("t_cb = 0.002\np_mv = 1e-6\n").expect("valid config");
    let layout = build_mesh(MeshSpec { rows: 2, cols: 4, lq_capacity: LqCapacity::Mobile, ..MeshSpec::default() }, &params)
        .expect("mesh");

    for benchmark in [Benchmark::Qft, Benchmark::ModMult, Benchmark::ModExp] {
        let stream = benchmark_stream(benchmark, 8).expect("size");
        let placement = placement_for(8, &layout).expect("fits");
        let levels = schedule(&stream, &placement).expect("valid stream");
        println!("{benchmark}: {} instructions in {} dependency levels", stream.len(), levels.len());
    }

    let stream = benchmark_stream(Benchmark::Qft, 4).expect("size");
    let placement = placement_for(4, &layout).expect("fits");
    let text = write_stream(&stream, Some(&placement));
    print!("{text}");
    let (back, places) = parse_stream(&text).expect("round trip");
    assert_eq!(back, stream);
    assert_eq!(places.len(), 4);
}
