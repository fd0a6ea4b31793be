//! Seeded generation of small random networks for property tests and
//! sanity suites.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Activation, InputBounds, Interval, Layer, Network};
use crate::rational::{int, ratio};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Layer widths of a dense network with ReLU hidden layers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetShape {
    pub inputs: usize,
    pub hidden: Vec<usize>,
    pub outputs: usize,
    pub output_activation: Activation,
}

impl NetShape {
    pub fn new(inputs: usize, hidden: &[usize], outputs: usize) -> Self {
        NetShape {
            inputs,
            hidden: hidden.to_vec(),
            outputs,
            output_activation: Activation::Linear,
        }
    }
}

/// Dense layer with weights and biases drawn from `n/4`, `n ∈ [-8, 8]`.
pub fn random_layer<R: Rng>(rng: &mut R, rows: usize, cols: usize, act: Activation) -> Layer {
    let mut draw = || ratio(rng.random_range(-8..=8), 4);
    let weights = (0..rows).map(|_| (0..cols).map(|_| draw()).collect()).collect();
    let biases = (0..cols).map(|_| draw()).collect();
    Layer {
        weights,
        biases,
        activation: act,
    }
}

/// Random network of the given shape. `bounds` defaults to `[0, 1]` per feature.
pub fn random_network<R: Rng>(rng: &mut R, shape: &NetShape, bounds: Option<InputBounds>) -> Network {
    let mut widths = Vec::with_capacity(shape.hidden.len() + 2);
    widths.push(shape.inputs);
    widths.extend(&shape.hidden);
    widths.push(shape.outputs);
    let last = widths.len() - 2;
    let layers = widths
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let act = if i == last { shape.output_activation } else { Activation::Relu };
            random_layer(rng, w[0], w[1], act)
        })
        .collect();
    let bounds =
        bounds.unwrap_or_else(|| (0..shape.inputs).map(|_| Some(Interval::new(int(0), int(1)))).collect());
    let name = format!(
        "rand_{}_{}_{}",
        shape.inputs,
        shape
            .hidden
            .iter()
            .map(|h| format!("{h}"))
            .collect::<Vec<_>>()
            .join("x"),
        shape.outputs
    );
    Network::new(name, shape.inputs, layers, bounds, None).expect("generated shapes are consistent")
}
