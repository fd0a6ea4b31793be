//! Small reference networks shared by tests, examples and the CLI test suite.

use alloc::vec;
use alloc::vec::Vec;

use crate::model::{Activation, Interval, Layer, Network};
use crate::rational::{int, parse_decimal, ratio, Rational};
use crate::synth::{random_layer, rng};

fn mat(rows: &[&[i64]]) -> Vec<Vec<Rational>> {
    rows.iter().map(|r| r.iter().map(|&v| int(v)).collect()).collect()
}

/// The 2-2-2 worked example: ReLU hidden layer, unactivated output,
/// inputs bounded to `[0, 1]`.
pub fn worked() -> Network {
    Network::new(
        "worked",
        2,
        vec![
            Layer {
                weights: mat(&[&[-2, 1], &[1, 2]]),
                biases: vec![int(1), int(1)],
                activation: Activation::Relu,
            },
            Layer {
                weights: mat(&[&[2, -1], &[-1, -2]]),
                biases: vec![int(2), int(2)],
                activation: Activation::Linear,
            },
        ],
        vec![Some(Interval::new(int(0), int(1))); 2],
        None,
    )
    .expect("worked is well-formed")
}

/// [`worked`] with the first output bias raised from 2 to 3, so `y1` is
/// larger by exactly 1 everywhere.
pub fn worked_bias_shifted() -> Network {
    let mut net = worked();
    net.name = "worked_bias".into();
    net.layers[1].biases[0] = int(3);
    net
}

/// MPC-controller shape: 6 inputs, three 45-node ReLU layers, one hard-tanh
/// output scaled by 1.04, with the controller's input ranges. Weights are
/// deterministic pseudo-random values, not trained ones.
pub fn mpc_shaped() -> Network {
    let mut r = rng(45);
    let widths = [6usize, 45, 45, 45, 1];
    let layers = widths
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let act = if i == 3 { Activation::HardTanh } else { Activation::Relu };
            random_layer(&mut r, w[0], w[1], act)
        })
        .collect();
    let d = |s: &str| parse_decimal(s).unwrap();
    let bounds = [
        ("-2", "2"),
        ("-1.04", "1.04"),
        ("-1", "1"),
        ("-0.8", "0.8"),
        ("-1.04", "1.04"),
        ("-0.01", "0.01"),
    ]
    .iter()
    .map(|(l, u)| Some(Interval::new(d(l), d(u))))
    .collect();
    Network::new("mpc_shaped", 6, layers, bounds, Some(ratio(104, 100))).expect("well-formed")
}
