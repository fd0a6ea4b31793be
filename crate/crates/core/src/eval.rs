//! Exact forward execution and the pointwise vector functions that define
//! each equivalence relation. This is the replay oracle for counterexamples.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::equivalence::EquivalenceRelation;
use crate::model::{Activation, Network};
use crate::rational::{to_exact_string, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("input has {actual} values, network expects {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("vector must not be empty")]
    EmptyVector,
    #[error("vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("epsilon must be positive, got {0}")]
    NonPositiveEpsilon(Rational),
    #[error("k = {k} out of range 1..={m}")]
    KOutOfRange { k: usize, m: usize },
}

pub fn apply_activation(act: Activation, v: &Rational) -> Rational {
    match act {
        Activation::Relu => {
            if v.is_negative() {
                Rational::zero()
            } else {
                v.clone()
            }
        }
        Activation::HardTanh => {
            let one = Rational::from_integer(1.into());
            let minus_one = -one.clone();
            if *v > one {
                one
            } else if *v < minus_one {
                minus_one
            } else {
                v.clone()
            }
        }
        Activation::Linear => v.clone(),
    }
}

/// Pre- and post-activation values of one layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerTrace {
    pub pre: Vec<Rational>,
    pub post: Vec<Rational>,
}

/// Every intermediate value of a forward pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub layers: Vec<LayerTrace>,
    /// Final activations times `output_scale`.
    pub outputs: Vec<Rational>,
}

/// Runs `net` on `x` layer by layer with exact arithmetic.
///
/// `x` need not respect the declared input bounds.
pub fn forward_trace(net: &Network, x: &[Rational]) -> Result<Trace, EvalError> {
    if x.len() != net.input_dim {
        return Err(EvalError::DimensionMismatch {
            expected: net.input_dim,
            actual: x.len(),
        });
    }
    let mut layers = Vec::with_capacity(net.layers.len());
    let mut current: Vec<Rational> = x.to_vec();
    for layer in &net.layers {
        let mut pre = layer.biases.clone();
        for (k, row) in layer.weights.iter().enumerate() {
            let xk = &current[k];
            if xk.is_zero() {
                continue;
            }
            for (acc, w) in pre.iter_mut().zip(row) {
                if !w.is_zero() {
                    *acc += xk * w;
                }
            }
        }
        let post: Vec<Rational> = pre
            .iter()
            .map(|v| apply_activation(layer.activation, v))
            .collect();
        current = post.clone();
        layers.push(LayerTrace { pre, post });
    }
    let outputs = match &net.output_scale {
        Some(s) => current.iter().map(|v| v * s).collect(),
        None => current,
    };
    Ok(Trace { layers, outputs })
}

pub fn forward(net: &Network, x: &[Rational]) -> Result<Vec<Rational>, EvalError> {
    forward_trace(net, x).map(|t| t.outputs)
}

/// 1-based index of the maximum; ties go to the lowest index.
pub fn argmax(y: &[Rational]) -> Result<usize, EvalError> {
    let mut best: Option<(usize, &Rational)> = None;
    for (i, v) in y.iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i + 1).ok_or(EvalError::EmptyVector)
}

/// 1-based permutation sorting `y` in decreasing order; equal values keep
/// ascending index order.
pub fn argsort(y: &[Rational]) -> Result<Vec<usize>, EvalError> {
    if y.is_empty() {
        return Err(EvalError::EmptyVector);
    }
    let mut idx: Vec<usize> = (0..y.len()).collect();
    // Stable sort keeps lower indices first among ties.
    idx.sort_by(|&a, &b| y[b].cmp(&y[a]));
    Ok(idx.into_iter().map(|i| i + 1).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Norm {
    L1,
    LInf,
}

pub fn distance(norm: Norm, y: &[Rational], y2: &[Rational]) -> Result<Rational, EvalError> {
    if y.len() != y2.len() {
        return Err(EvalError::LengthMismatch(y.len(), y2.len()));
    }
    let diffs = y.iter().zip(y2).map(|(a, b)| (a - b).abs());
    Ok(match norm {
        Norm::L1 => diffs.fold(Rational::zero(), |acc, d| acc + d),
        Norm::LInf => diffs.fold(Rational::zero(), |acc, d| if d > acc { d } else { acc }),
    })
}

/// Why a pair of output vectors violates a relation. Indices are 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    /// First coordinate where the outputs differ.
    Coordinate { index: usize, a: Rational, b: Rational },
    /// Distance reached epsilon; `index` is the largest-gap coordinate.
    Distance { norm: Norm, value: Rational, epsilon: Rational, index: usize },
    Argmax { a: usize, b: usize },
    /// First argsort position (within the top k) where the rankings differ.
    Rank { position: usize, a: usize, b: usize },
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Coordinate { index, a, b } => write!(
                f,
                "y{index} differs: {} vs {}",
                to_exact_string(a),
                to_exact_string(b)
            ),
            Witness::Distance { norm, value, epsilon, index } => {
                let n = match norm {
                    Norm::L1 => "L1",
                    Norm::LInf => "Linf",
                };
                write!(
                    f,
                    "{n} distance {} >= epsilon {} (largest gap at y{index})",
                    to_exact_string(value),
                    to_exact_string(epsilon)
                )
            }
            Witness::Argmax { a, b } => write!(f, "argmax differs: {a} vs {b}"),
            Witness::Rank { position, a, b } => {
                write!(f, "argsort position {position} differs: {a} vs {b}")
            }
        }
    }
}

/// Checks whether `(y, y2)` violates `rel` at this single point.
///
/// Norm relations are violated when the distance is at least epsilon.
pub fn relation_violated_at(
    rel: &EquivalenceRelation,
    y: &[Rational],
    y2: &[Rational],
) -> Result<Option<Witness>, EvalError> {
    if y.len() != y2.len() {
        return Err(EvalError::LengthMismatch(y.len(), y2.len()));
    }
    if y.is_empty() {
        return Err(EvalError::EmptyVector);
    }
    let witness = match rel {
        EquivalenceRelation::Strict => y
            .iter()
            .zip(y2)
            .position(|(a, b)| a != b)
            .map(|i| Witness::Coordinate {
                index: i + 1,
                a: y[i].clone(),
                b: y2[i].clone(),
            }),
        EquivalenceRelation::L1(eps) | EquivalenceRelation::LInf(eps) => {
            if !eps.is_positive() {
                return Err(EvalError::NonPositiveEpsilon(eps.clone()));
            }
            let norm = match rel {
                EquivalenceRelation::L1(_) => Norm::L1,
                _ => Norm::LInf,
            };
            let value = distance(norm, y, y2)?;
            if value >= *eps {
                Some(Witness::Distance {
                    norm,
                    value,
                    epsilon: eps.clone(),
                    index: largest_gap(y, y2),
                })
            } else {
                None
            }
        }
        EquivalenceRelation::Argmax => {
            let (a, b) = (argmax(y)?, argmax(y2)?);
            (a != b).then_some(Witness::Argmax { a, b })
        }
        EquivalenceRelation::TopK(k) => {
            let m = y.len();
            if *k == 0 || *k > m {
                return Err(EvalError::KOutOfRange { k: *k, m });
            }
            let (sa, sb) = (argsort(y)?, argsort(y2)?);
            sa.iter()
                .zip(&sb)
                .take(*k)
                .position(|(a, b)| a != b)
                .map(|p| Witness::Rank {
                    position: p + 1,
                    a: sa[p],
                    b: sb[p],
                })
        }
    };
    Ok(witness)
}

fn largest_gap(y: &[Rational], y2: &[Rational]) -> usize {
    let mut best = 0;
    let mut best_gap = Rational::zero();
    for (i, (a, b)) in y.iter().zip(y2).enumerate() {
        let gap = (a - b).abs();
        if gap.cmp(&best_gap) == Ordering::Greater {
            best = i;
            best_gap = gap;
        }
    }
    best + 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::worked;
    use crate::rational::{int, parse_decimal, ratio, to_f64};
    use alloc::vec;
    use proptest::prelude::*;

    fn v(xs: &[&str]) -> Vec<Rational> {
        xs.iter().map(|s| parse_decimal(s).unwrap()).collect()
    }

    #[test]
    fn activations() {
        assert_eq!(apply_activation(Activation::Relu, &int(-5)), int(0));
        assert_eq!(apply_activation(Activation::HardTanh, &int(2)), int(1));
        assert_eq!(apply_activation(Activation::HardTanh, &int(-3)), int(-1));
        assert_eq!(apply_activation(Activation::Linear, &ratio(7, 3)), ratio(7, 3));
    }

    #[test]
    fn worked_forward_points() {
        let net = worked();
        assert_eq!(forward(&net, &[int(0), int(0)]).unwrap(), vec![int(3), int(-1)]);
        assert_eq!(forward(&net, &[int(1), int(0)]).unwrap(), vec![int(0), int(-2)]);
        assert_eq!(
            forward(&net, &[ratio(1, 2), ratio(1, 2)]).unwrap(),
            vec![ratio(1, 2), ratio(-7, 2)]
        );
    }

    #[test]
    fn forward_rejects_wrong_arity() {
        assert_eq!(
            forward(&worked(), &[int(0)]),
            Err(EvalError::DimensionMismatch { expected: 2, actual: 1 })
        );
    }

    #[test]
    fn argmax_examples() {
        assert_eq!(argmax(&v(&["0.3", "0.5", "0.2"])).unwrap(), 2);
        assert_eq!(argmax(&v(&["0.5", "0.5"])).unwrap(), 1);
        assert_eq!(argmax(&v(&["4"])).unwrap(), 1);
        assert_eq!(argmax(&[]), Err(EvalError::EmptyVector));
    }

    #[test]
    fn argsort_examples() {
        assert_eq!(argsort(&v(&["0.3", "0.5", "0.2"])).unwrap(), vec![2, 1, 3]);
        // Ties keep ascending index order: 0.3 at positions 1 and 3.
        assert_eq!(argsort(&v(&["0.3", "0.4", "0.3"])).unwrap(), vec![2, 1, 3]);
        assert_eq!(argsort(&v(&["1", "1", "1"])).unwrap(), vec![1, 2, 3]);
        assert_eq!(argsort(&[]), Err(EvalError::EmptyVector));
    }

    #[test]
    fn distance_examples() {
        let z = vec![int(0), int(0)];
        let w = vec![int(1), int(-2)];
        assert_eq!(distance(Norm::L1, &v(&["1", "2"]), &v(&["1", "2"])).unwrap(), int(0));
        assert_eq!(distance(Norm::L1, &z, &w).unwrap(), int(3));
        assert_eq!(distance(Norm::LInf, &z, &w).unwrap(), int(2));
        assert!(distance(Norm::L1, &z, &[int(1)]).is_err());
    }

    #[test]
    fn pointwise_relations() {
        use EquivalenceRelation::*;
        assert_eq!(
            relation_violated_at(&Strict, &[int(3), int(-1)], &[int(3), int(-1)]).unwrap(),
            None
        );
        let w = relation_violated_at(&LInf(int(2)), &[int(0), int(0)], &[int(1), int(-2)])
            .unwrap()
            .unwrap();
        assert!(matches!(w, Witness::Distance { index: 2, .. }));
        assert_eq!(
            relation_violated_at(
                &Argmax,
                &v(&["0.3", "0.5", "0.2"]),
                &v(&["0.25", "0.6", "0.15"])
            )
            .unwrap(),
            None
        );
        assert_eq!(
            relation_violated_at(&TopK(3), &v(&["0.3", "0.5", "0.2"]), &v(&["0.25", "0.6", "0.15"]))
                .unwrap(),
            None
        );
        assert_eq!(
            relation_violated_at(&TopK(2), &[int(1), int(0)], &[int(0), int(1)]).unwrap(),
            Some(Witness::Rank { position: 1, a: 1, b: 2 })
        );
    }

    #[test]
    fn pointwise_parameter_errors() {
        use EquivalenceRelation::*;
        let y = [int(0)];
        assert!(matches!(
            relation_violated_at(&L1(int(0)), &y, &y),
            Err(EvalError::NonPositiveEpsilon(_))
        ));
        assert_eq!(
            relation_violated_at(&TopK(2), &y, &y),
            Err(EvalError::KOutOfRange { k: 2, m: 1 })
        );
    }

    fn small_rational() -> impl Strategy<Value = Rational> {
        (-40i64..40, 1i64..8).prop_map(|(n, d)| ratio(n, d))
    }

    fn vec_pair() -> impl Strategy<Value = (Vec<Rational>, Vec<Rational>)> {
        (1usize..6).prop_flat_map(|m| {
            (
                proptest::collection::vec(small_rational(), m),
                proptest::collection::vec(small_rational(), m),
            )
        })
    }

    proptest! {
        #[test]
        fn argmax_is_head_of_argsort(y in proptest::collection::vec((-3i64..3).prop_map(int), 1..7)) {
            prop_assert_eq!(argmax(&y).unwrap(), argsort(&y).unwrap()[0]);
        }

        #[test]
        fn argsort_is_sorting_permutation(y in proptest::collection::vec((-3i64..3).prop_map(int), 1..7)) {
            let p = argsort(&y).unwrap();
            let mut seen = p.clone();
            seen.sort_unstable();
            prop_assert_eq!(seen, (1..=y.len()).collect::<Vec<_>>());
            for w in p.windows(2) {
                let (a, b) = (&y[w[0] - 1], &y[w[1] - 1]);
                prop_assert!(a >= b);
                if a == b {
                    prop_assert!(w[0] < w[1]);
                }
            }
        }

        #[test]
        fn distance_is_zero_on_diagonal_and_symmetric((y, y2) in vec_pair()) {
            for norm in [Norm::L1, Norm::LInf] {
                prop_assert_eq!(distance(norm, &y, &y).unwrap(), Rational::zero());
                prop_assert_eq!(distance(norm, &y, &y2).unwrap(), distance(norm, &y2, &y).unwrap());
            }
        }

        #[test]
        fn strict_violation_iff_some_coordinate_differs((y, y2) in vec_pair()) {
            let violated = relation_violated_at(&EquivalenceRelation::Strict, &y, &y2).unwrap().is_some();
            prop_assert_eq!(violated, y.iter().zip(&y2).any(|(a, b)| a != b));
        }

        #[test]
        fn exact_forward_matches_float_forward(
            seed in any::<u64>(),
            x in proptest::collection::vec(small_rational(), 3),
        ) {
            let net = crate::synth::random_network(
                &mut crate::synth::rng(seed),
                &crate::synth::NetShape::new(3, &[4, 3], 2),
                None,
            );
            let exact = forward(&net, &x).unwrap();
            let float = float_forward(&net, &x.iter().map(to_f64).collect::<Vec<_>>());
            for (e, f) in exact.iter().zip(float) {
                prop_assert!((to_f64(e) - f).abs() < 1e-9);
            }
        }
    }

    fn float_forward(net: &Network, x: &[f64]) -> Vec<f64> {
        let mut cur = x.to_vec();
        for layer in &net.layers {
            let mut next: Vec<f64> = layer.biases.iter().map(to_f64).collect();
            for (k, row) in layer.weights.iter().enumerate() {
                for (j, w) in row.iter().enumerate() {
                    next[j] += cur[k] * to_f64(w);
                }
            }
            cur = next
                .into_iter()
                .map(|v| match layer.activation {
                    Activation::Relu => v.max(0.0),
                    Activation::HardTanh => v.clamp(-1.0, 1.0),
                    Activation::Linear => v,
                })
                .collect();
        }
        let s = net.output_scale.as_ref().map_or(1.0, to_f64);
        cur.into_iter().map(|v| v * s).collect()
    }
}
