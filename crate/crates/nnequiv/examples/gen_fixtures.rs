//! Regenerates the model files under `fixtures/`.
//!
//! The checked-in files are authoritative; this program only documents how
//! they were produced. Run with `cargo run -p nnequiv --example gen_fixtures`.

use std::path::Path;

use nnequiv::core::fixtures::{worked, worked_bias_shifted, mpc_shaped};
use nnequiv::core::synth::{random_network, rng, NetShape};
use nnequiv::core::Network;
use nnequiv::format::network_to_json;

fn named(mut net: Network, name: &str) -> Network {
    net.name = name.to_owned();
    net
}

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    std::fs::create_dir_all(&dir).expect("fixtures directory");
    let nets = [
        worked(),
        worked_bias_shifted(),
        named(random_network(&mut rng(1), &NetShape::new(10, &[10], 2), None), "bitvec_1_1"),
        named(random_network(&mut rng(2), &NetShape::new(10, &[10, 10], 2), None), "bitvec_2_1"),
        named(random_network(&mut rng(3), &NetShape::new(784, &[10], 10), None), "mnist_1_1"),
        named(mpc_shaped(), "mpc"),
    ];
    for net in nets {
        let path = dir.join(format!("{}.json", net.name));
        std::fs::write(&path, network_to_json(&net)).expect("write fixture");
        println!("{} ({} parameters)", path.display(), net.param_count());
    }
}
