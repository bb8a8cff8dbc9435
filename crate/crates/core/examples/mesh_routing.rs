//! Mesh construction, dimension-order routes and idle-mesh transfer times.
//!
//! cargo run --example mesh_routing

use qnet::simulator::{open_channels, teleport_logical, SimConfig};
use qnet::topology::{build_mesh, midpoint_generator, Coordinate, MeshSpec};

fn main() {
    let params = qnet::default_ion_trap();
    let layout = build_mesh(MeshSpec { rows: 4, cols: 4, ..MeshSpec::default() }, &params).expect("mesh");
    let wire = &layout.links[0];
    println!(
        "{} routers, {} links, {} pairs/us per link at 1-F {:.2e}",
        layout.router_count(),
        layout.links.len(),
        wire.rate,
        wire.fidelity.error()
    );

    let (src, dst) = (Coordinate::new(0, 0), Coordinate::new(3, 2));
    let path = layout.dimension_order_path(src, dst).expect("in bounds");
    let route: Vec<String> = path.iter().map(|c| c.to_string()).collect();
    println!("route {}", route.join(" -> "));
    let (a, b) = midpoint_generator(&path).expect("non-trivial path");
    println!("midpoint generator between {a} and {b}");

    let config = SimConfig::default();
    for (a, b) in [(0, 1), (0, 2), (0, 3)] {
        let t = teleport_logical(Coordinate::new(0, 0), Coordinate::new(a + b, 0), &layout, &params, &config).unwrap();
        println!("logical teleport over {} hops: {t:.1} us", a + b);
    }

    let crossing = [(Coordinate::new(1, 0), Coordinate::new(2, 0)), (Coordinate::new(0, 0), Coordinate::new(3, 0))];
    let alone: Vec<f64> = crossing
        .iter()
        .map(|&c| open_channels(&[c], 49, &layout, &params, &config).unwrap()[0])
        .collect();
    let shared = open_channels(&crossing, 49, &layout, &params, &config).unwrap();
    println!("channels alone {alone:.1?} us, together {shared:.1?} us");
}
