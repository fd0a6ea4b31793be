//! Exact-arithmetic description of a trained feedforward network.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::rational::{to_exact_string, Rational};

/// Activation applied element-wise after a layer's affine map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Relu,
    HardTanh,
    /// Identity; used for unactivated output layers.
    Linear,
}

impl Activation {
    /// Name used in model files.
    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::HardTanh => "hardtanh",
            Activation::Linear => "linear",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "relu" => Some(Activation::Relu),
            "hardtanh" => Some(Activation::HardTanh),
            "linear" => Some(Activation::Linear),
            _ => None,
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One dense layer computing `act(x·W + b)`.
///
/// `weights[k][j]` connects source node `k` to destination node `j`, so the
/// row count is the layer's input width and the column count its output width.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layer {
    pub weights: Vec<Vec<Rational>>,
    pub biases: Vec<Rational>,
    pub activation: Activation,
}

impl Layer {
    pub fn rows(&self) -> usize {
        self.weights.len()
    }

    /// Output width: the first weight row's length (bias length if there are no rows).
    pub fn cols(&self) -> usize {
        self.weights.first().map_or(self.biases.len(), Vec::len)
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>() + self.biases.len()
    }
}

/// Closed interval `[lower, upper]` for one input feature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interval {
    pub lower: Rational,
    pub upper: Rational,
}

impl Interval {
    pub fn new(lower: Rational, upper: Rational) -> Self {
        Interval { lower, upper }
    }

    pub fn contains(&self, v: &Rational) -> bool {
        &self.lower <= v && v <= &self.upper
    }
}

/// Per-feature bounds; `None` leaves the feature unconstrained.
pub type InputBounds = Vec<Option<Interval>>;

/// A feedforward network over exact rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    pub name: String,
    pub input_dim: usize,
    pub layers: Vec<Layer>,
    pub input_bounds: InputBounds,
    /// Scalar applied element-wise after the final activation.
    pub output_scale: Option<Rational>,
}

/// A single structural invariant breach. Layer and feature indices are 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    ZeroInputs,
    NoLayers,
    /// Weight row count disagrees with the width feeding the layer.
    RowCount { layer: usize, expected: usize, actual: usize },
    /// A weight row's length disagrees with the first row's.
    RowLength { layer: usize, row: usize, expected: usize, actual: usize },
    /// Bias vector length disagrees with the weight column count.
    BiasLength { layer: usize, expected: usize, actual: usize },
    EmptyLayer { layer: usize },
    BoundsLength { expected: usize, actual: usize },
    InvertedBounds { feature: usize, lower: Rational, upper: Rational },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ZeroInputs => write!(f, "input dimension must be positive"),
            Violation::NoLayers => write!(f, "network has no layers"),
            Violation::RowCount { layer, expected, actual } => write!(
                f,
                "layer {layer}: weight matrix has {actual} rows, expected {expected}"
            ),
            Violation::RowLength { layer, row, expected, actual } => write!(
                f,
                "layer {layer}: weight row {row} has {actual} entries, expected {expected}"
            ),
            Violation::BiasLength { layer, expected, actual } => write!(
                f,
                "layer {layer}: bias vector has {actual} entries, expected {expected} (column count)"
            ),
            Violation::EmptyLayer { layer } => write!(f, "layer {layer}: no output nodes"),
            Violation::BoundsLength { expected, actual } => write!(
                f,
                "input_bounds has {actual} entries, expected {expected}"
            ),
            Violation::InvertedBounds { feature, lower, upper } => write!(
                f,
                "feature {feature}: lower bound {} exceeds upper bound {}",
                to_exact_string(lower),
                to_exact_string(upper)
            ),
        }
    }
}

/// The network failed validation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid network: {}", join(.0))]
pub struct InvalidNetwork(pub Vec<Violation>);

fn join(v: &[Violation]) -> String {
    use core::fmt::Write;
    let mut out = String::new();
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            out.push_str("; ");
        }
        let _ = write!(out, "{x}");
    }
    out
}

impl Network {
    /// Builds a network and rejects it unless [`Network::validate`] is clean.
    pub fn new(
        name: impl Into<String>,
        input_dim: usize,
        layers: Vec<Layer>,
        input_bounds: InputBounds,
        output_scale: Option<Rational>,
    ) -> Result<Self, InvalidNetwork> {
        let net = Network {
            name: name.into(),
            input_dim,
            layers,
            input_bounds,
            output_scale,
        };
        let violations = net.validate();
        if violations.is_empty() {
            Ok(net)
        } else {
            Err(InvalidNetwork(violations))
        }
    }

    /// Width of the final layer.
    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, Layer::cols)
    }

    /// Number of scalar parameters: weights plus biases over all layers.
    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// Every invariant breach, in layer order; empty means valid.
    ///
    /// An empty `input_bounds` list means all features are unbounded.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.input_dim == 0 {
            out.push(Violation::ZeroInputs);
        }
        if self.layers.is_empty() {
            out.push(Violation::NoLayers);
        }
        let mut width = self.input_dim;
        for (idx, layer) in self.layers.iter().enumerate() {
            let layer_no = idx + 1;
            if layer.rows() != width {
                out.push(Violation::RowCount {
                    layer: layer_no,
                    expected: width,
                    actual: layer.rows(),
                });
            }
            if layer.cols() == 0 {
                out.push(Violation::EmptyLayer { layer: layer_no });
            }
            if layer.biases.len() != layer.cols() {
                out.push(Violation::BiasLength {
                    layer: layer_no,
                    expected: layer.cols(),
                    actual: layer.biases.len(),
                });
            }
            for (r, row) in layer.weights.iter().enumerate().skip(1) {
                if row.len() != layer.cols() {
                    out.push(Violation::RowLength {
                        layer: layer_no,
                        row: r + 1,
                        expected: layer.cols(),
                        actual: row.len(),
                    });
                }
            }
            width = layer.cols();
        }
        if !self.input_bounds.is_empty() && self.input_bounds.len() != self.input_dim {
            out.push(Violation::BoundsLength {
                expected: self.input_dim,
                actual: self.input_bounds.len(),
            });
        }
        for (j, b) in self.input_bounds.iter().enumerate() {
            if let Some(iv) = b {
                if iv.lower > iv.upper {
                    out.push(Violation::InvertedBounds {
                        feature: j + 1,
                        lower: iv.lower.clone(),
                        upper: iv.upper.clone(),
                    });
                }
            }
        }
        out
    }

    /// Bound for feature `j` (0-based), if declared.
    pub fn bound(&self, j: usize) -> Option<&Interval> {
        self.input_bounds.get(j).and_then(Option::as_ref)
    }

    /// True when `x` lies inside every declared bound.
    pub fn within_bounds(&self, x: &[Rational]) -> bool {
        x.iter()
            .enumerate()
            .all(|(j, v)| self.bound(j).is_none_or(|iv| iv.contains(v)))
    }

    /// Iterates over every scalar parameter as `(layer, kind, row, col)`
    /// with 0-based indices; biases report `row = 0`.
    pub fn parameter_positions(&self) -> impl Iterator<Item = ParamPosition> + '_ {
        self.layers.iter().enumerate().flat_map(|(l, layer)| {
            let weights = layer.weights.iter().enumerate().flat_map(move |(r, row)| {
                (0..row.len()).map(move |c| ParamPosition {
                    layer: l,
                    kind: ParamKind::Weight,
                    row: r,
                    col: c,
                })
            });
            let biases = (0..layer.biases.len()).map(move |c| ParamPosition {
                layer: l,
                kind: ParamKind::Bias,
                row: 0,
                col: c,
            });
            weights.chain(biases)
        })
    }

    pub fn param(&self, at: &ParamPosition) -> &Rational {
        let layer = &self.layers[at.layer];
        match at.kind {
            ParamKind::Weight => &layer.weights[at.row][at.col],
            ParamKind::Bias => &layer.biases[at.col],
        }
    }

    pub fn param_mut(&mut self, at: &ParamPosition) -> &mut Rational {
        let layer = &mut self.layers[at.layer];
        match at.kind {
            ParamKind::Weight => &mut layer.weights[at.row][at.col],
            ParamKind::Bias => &mut layer.biases[at.col],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ParamKind {
    Weight,
    Bias,
}

impl ParamKind {
    pub fn name(self) -> &'static str {
        match self {
            ParamKind::Weight => "weight",
            ParamKind::Bias => "bias",
        }
    }
}

/// Location of one scalar parameter (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamPosition {
    pub layer: usize,
    pub kind: ParamKind,
    pub row: usize,
    pub col: usize,
}
