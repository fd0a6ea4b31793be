//! Compiles a [`Network`] into a linear real arithmetic formula.
//!
//! Each hidden layer gets affine variables `z` and activation variables `h`.
//! ReLU and hard tanh are encoded as explicit case splits, one disjunction
//! per node, or optionally as `ite` definitions of `h`. The output scale, when present, is folded into the last
//! equalities instead of adding a layer.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::One;
use thiserror::Error;

use crate::eval::Trace;
use crate::formula::{Assignment, CmpOp, Formula, Term};
use crate::model::{Activation, Interval, Layer, Network};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("layer {layer}: expected {expected} input variables, got {actual}")]
    InputWidth { layer: usize, expected: usize, actual: usize },
    #[error("layer {layer}: expected {expected} output variables, got {actual}")]
    OutputWidth { layer: usize, expected: usize, actual: usize },
}

/// Produces the variable names of one network inside a query.
///
/// Inputs are shared between networks and carry no prefix (`x1`, `x2`, …);
/// everything else is prefixed so two networks never collide. A namer hands
/// out auxiliaries sequentially and must not be shared between concurrent
/// encodings.
#[derive(Debug, Clone)]
pub struct VariableNamer {
    prefix: String,
    next_aux: usize,
    issued_aux: Vec<String>,
}

impl VariableNamer {
    pub fn new(prefix: impl Into<String>) -> Self {
        VariableNamer {
            prefix: prefix.into(),
            next_aux: 1,
            issued_aux: Vec::new(),
        }
    }

    pub fn prefix(&self) -> &str {
        &self.prefix
    }

    /// Shared input variable for feature `j` (1-based).
    pub fn input(j: usize) -> String {
        format!("x{j}")
    }

    pub fn inputs(n: usize) -> Vec<String> {
        (1..=n).map(Self::input).collect()
    }

    pub fn affine(&self, layer: usize, j: usize) -> String {
        format!("{}_l{layer}_z{j}", self.prefix)
    }

    pub fn activation(&self, layer: usize, j: usize) -> String {
        format!("{}_l{layer}_h{j}", self.prefix)
    }

    pub fn output(&self, i: usize) -> String {
        format!("{}_y{i}", self.prefix)
    }

    pub fn fresh_aux(&mut self) -> String {
        let name = format!("{}_aux{}", self.prefix, self.next_aux);
        self.next_aux += 1;
        self.issued_aux.push(name.clone());
        name
    }

    /// Auxiliaries issued so far, in order.
    pub fn issued_aux(&self) -> &[String] {
        &self.issued_aux
    }
}

/// `l_j ≤ x_j ∧ x_j ≤ u_j` for every bounded feature; `True` if none.
pub fn encode_input_bounds(bounds: &[Option<Interval>], inputs: &[String]) -> Formula {
    Formula::and(bounds.iter().zip(inputs).filter_map(|(b, x)| {
        b.as_ref().map(|iv| {
            Formula::and([
                Formula::cmp(Term::Const(iv.lower.clone()), CmpOp::Le, Term::var(x.as_str())),
                Formula::cmp(Term::var(x.as_str()), CmpOp::Le, Term::Const(iv.upper.clone())),
            ])
        })
    }))
}

fn affine_equalities(
    layer_no: usize,
    layer: &Layer,
    in_vars: &[String],
    out_vars: &[String],
    scale: Option<&Rational>,
) -> Result<Formula, EncodeError> {
    if in_vars.len() != layer.rows() {
        return Err(EncodeError::InputWidth {
            layer: layer_no,
            expected: layer.rows(),
            actual: in_vars.len(),
        });
    }
    if out_vars.len() != layer.cols() {
        return Err(EncodeError::OutputWidth {
            layer: layer_no,
            expected: layer.cols(),
            actual: out_vars.len(),
        });
    }
    Ok(Formula::and(out_vars.iter().enumerate().map(|(j, out)| {
        let sum = Term::linear(
            layer
                .weights
                .iter()
                .zip(in_vars)
                .map(|(row, v)| (&row[j], v.as_str())),
            &layer.biases[j],
        );
        let rhs = match scale {
            Some(s) => Term::scaled(s.clone(), sum),
            None => sum,
        };
        Formula::eq(Term::var(out.as_str()), rhs)
    })))
}

/// `z_j = Σ_k in_k·W_kj + b_j` for every destination node `j`.
pub fn encode_affine(
    layer: &Layer,
    in_vars: &[String],
    z_vars: &[String],
) -> Result<Formula, EncodeError> {
    affine_equalities(1, layer, in_vars, z_vars, None)
}

fn c(v: i64) -> Term {
    Term::Const(Rational::from_integer(v.into()))
}

/// `(z_j ≥ 0 ∧ h_j = z_j) ∨ (z_j < 0 ∧ h_j = 0)` per node.
pub fn encode_relu(z_vars: &[String], h_vars: &[String]) -> Formula {
    debug_assert_eq!(z_vars.len(), h_vars.len());
    Formula::and(z_vars.iter().zip(h_vars).map(|(z, h)| {
        let (z, h) = (z.as_str(), h.as_str());
        Formula::Or(alloc::vec![
            Formula::And(alloc::vec![
                Formula::cmp(Term::var(z), CmpOp::Ge, c(0)),
                Formula::eq(Term::var(h), Term::var(z)),
            ]),
            Formula::And(alloc::vec![
                Formula::cmp(Term::var(z), CmpOp::Lt, c(0)),
                Formula::eq(Term::var(h), c(0)),
            ]),
        ])
    }))
}

/// `(z ≥ 1 ∧ h = 1) ∨ (z ≤ −1 ∧ h = −1) ∨ (−1 < z ∧ z < 1 ∧ z = h)` per node.
pub fn encode_hardtanh(z_vars: &[String], h_vars: &[String]) -> Formula {
    debug_assert_eq!(z_vars.len(), h_vars.len());
    Formula::and(z_vars.iter().zip(h_vars).map(|(z, h)| {
        let (z, h) = (z.as_str(), h.as_str());
        Formula::Or(alloc::vec![
            Formula::And(alloc::vec![
                Formula::cmp(Term::var(z), CmpOp::Ge, c(1)),
                Formula::eq(Term::var(h), c(1)),
            ]),
            Formula::And(alloc::vec![
                Formula::cmp(Term::var(z), CmpOp::Le, c(-1)),
                Formula::eq(Term::var(h), c(-1)),
            ]),
            Formula::And(alloc::vec![
                Formula::cmp(c(-1), CmpOp::Lt, Term::var(z)),
                Formula::cmp(Term::var(z), CmpOp::Lt, c(1)),
                Formula::eq(Term::var(z), Term::var(h)),
            ]),
        ])
    }))
}

/// How piecewise-linear activations are written.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum ActivationEncoding {
    /// One disjunction of guarded cases per node.
    #[default]
    Disjunctive,
    /// `h_j = ite(…)` per node. Same models; solvers can substitute `h` away.
    Ite,
}

impl ActivationEncoding {
    pub fn tag(self) -> &'static str {
        match self {
            ActivationEncoding::Disjunctive => "disjunctive",
            ActivationEncoding::Ite => "ite",
        }
    }
}

/// `h_j = ite(z_j ≥ 0, z_j, 0)` per node.
pub fn encode_relu_ite(z_vars: &[String], h_vars: &[String]) -> Formula {
    debug_assert_eq!(z_vars.len(), h_vars.len());
    Formula::and(z_vars.iter().zip(h_vars).map(|(z, h)| {
        let (z, h) = (z.as_str(), h.as_str());
        Formula::eq(
            Term::var(h),
            Term::ite(Formula::cmp(Term::var(z), CmpOp::Ge, c(0)), Term::var(z), c(0)),
        )
    }))
}

/// `h_j = ite(z_j ≥ 1, 1, ite(z_j ≤ −1, −1, z_j))` per node.
pub fn encode_hardtanh_ite(z_vars: &[String], h_vars: &[String]) -> Formula {
    debug_assert_eq!(z_vars.len(), h_vars.len());
    Formula::and(z_vars.iter().zip(h_vars).map(|(z, h)| {
        let (z, h) = (z.as_str(), h.as_str());
        let inner = Term::ite(Formula::cmp(Term::var(z), CmpOp::Le, c(-1)), c(-1), Term::var(z));
        Formula::eq(
            Term::var(h),
            Term::ite(Formula::cmp(Term::var(z), CmpOp::Ge, c(1)), c(1), inner),
        )
    }))
}

fn encode_activation(act: Activation, enc: ActivationEncoding, z: &[String], h: &[String]) -> Formula {
    match (act, enc) {
        (Activation::Relu, ActivationEncoding::Disjunctive) => encode_relu(z, h),
        (Activation::Relu, ActivationEncoding::Ite) => encode_relu_ite(z, h),
        (Activation::HardTanh, ActivationEncoding::Disjunctive) => encode_hardtanh(z, h),
        (Activation::HardTanh, ActivationEncoding::Ite) => encode_hardtanh_ite(z, h),
        (Activation::Linear, _) => Formula::and(
            z.iter()
                .zip(h)
                .map(|(z, h)| Formula::eq(Term::var(h.as_str()), Term::var(z.as_str()))),
        ),
    }
}

/// Introduces a fresh `a` with `a = |t|` in every model.
pub fn encode_abs(t: Term, namer: &mut VariableNamer) -> (String, Formula) {
    let a = namer.fresh_aux();
    let neg = Term::scaled(-Rational::one(), t.clone());
    let f = Formula::Or(alloc::vec![
        Formula::And(alloc::vec![
            Formula::cmp(t.clone(), CmpOp::Ge, c(0)),
            Formula::eq(Term::var(a.as_str()), t.clone()),
        ]),
        Formula::And(alloc::vec![
            Formula::cmp(t, CmpOp::Lt, c(0)),
            Formula::eq(Term::var(a.as_str()), neg),
        ]),
    ]);
    (a, f)
}

/// Variables attached to one layer. `affine` is absent when the layer's
/// affine map writes the outputs directly; `activation` is absent for
/// linear layers and when the activation writes the outputs directly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerVars {
    pub affine: Option<Vec<String>>,
    pub activation: Option<Vec<String>>,
}

/// Result of encoding one network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkEncoding {
    pub formula: Formula,
    pub layers: Vec<LayerVars>,
    pub outputs: Vec<String>,
}

impl NetworkEncoding {
    /// Internal (non-input, non-output) variables in declaration order.
    pub fn internal_vars(&self) -> impl Iterator<Item = &String> {
        self.layers.iter().flat_map(|l| {
            l.affine
                .iter()
                .flatten()
                .chain(l.activation.iter().flatten())
        })
    }

    /// Values the encoding's variables take when the network runs on the
    /// traced input. Inputs are not included.
    pub fn assignment_from_trace(&self, trace: &Trace) -> Assignment {
        let mut env = Assignment::new();
        for (vars, values) in self.layers.iter().zip(&trace.layers) {
            if let Some(z) = &vars.affine {
                env.extend(z.iter().cloned().zip(values.pre.iter().cloned()));
            }
            if let Some(h) = &vars.activation {
                env.extend(h.iter().cloned().zip(values.post.iter().cloned()));
            }
        }
        env.extend(self.outputs.iter().cloned().zip(trace.outputs.iter().cloned()));
        env
    }
}

/// Encodes every layer of `net` over the given input variables.
///
/// Input bounds are not included; the query builder adds them once for
/// both networks.
pub fn encode_network(
    net: &Network,
    namer: &mut VariableNamer,
    input_vars: &[String],
) -> Result<NetworkEncoding, EncodeError> {
    encode_network_with(net, namer, input_vars, ActivationEncoding::Disjunctive)
}

pub fn encode_network_with(
    net: &Network,
    namer: &mut VariableNamer,
    input_vars: &[String],
    enc: ActivationEncoding,
) -> Result<NetworkEncoding, EncodeError> {
    let outputs: Vec<String> = (1..=net.output_dim()).map(|i| namer.output(i)).collect();
    let mut parts = Vec::new();
    let mut layers = Vec::with_capacity(net.layers.len());
    let mut current: Vec<String> = input_vars.to_vec();
    let last = net.layers.len();

    for (idx, layer) in net.layers.iter().enumerate() {
        let l = idx + 1;
        let z: Vec<String> = (1..=layer.cols()).map(|j| namer.affine(l, j)).collect();
        let h: Vec<String> = (1..=layer.cols()).map(|j| namer.activation(l, j)).collect();
        let scale = net.output_scale.as_ref();

        let vars = if l < last {
            parts.push(affine_equalities(l, layer, &current, &z, None)?);
            if layer.activation == Activation::Linear {
                current = z.clone();
                LayerVars { affine: Some(z), activation: None }
            } else {
                parts.push(encode_activation(layer.activation, enc, &z, &h));
                current = h.clone();
                LayerVars { affine: Some(z), activation: Some(h) }
            }
        } else {
            match (layer.activation, scale) {
                (Activation::Linear, s) => {
                    parts.push(affine_equalities(l, layer, &current, &outputs, s)?);
                    LayerVars { affine: None, activation: None }
                }
                (act, None) => {
                    parts.push(affine_equalities(l, layer, &current, &z, None)?);
                    parts.push(encode_activation(act, enc, &z, &outputs));
                    LayerVars { affine: Some(z), activation: None }
                }
                (act, Some(s)) => {
                    parts.push(affine_equalities(l, layer, &current, &z, None)?);
                    parts.push(encode_activation(act, enc, &z, &h));
                    parts.push(Formula::and(outputs.iter().zip(&h).map(|(y, h)| {
                        Formula::eq(
                            Term::var(y.as_str()),
                            Term::scaled(s.clone(), Term::var(h.as_str())),
                        )
                    })));
                    LayerVars { affine: Some(z), activation: Some(h) }
                }
            }
        };
        layers.push(vars);
    }

    Ok(NetworkEncoding {
        formula: Formula::and(parts),
        layers,
        outputs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::forward_trace;
    use crate::fixtures::{worked, mpc_shaped};
    use crate::rational::{int, ratio};
    use alloc::string::ToString;
    use alloc::vec;

    fn names(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    fn v(n: &str) -> Term {
        Term::var(n)
    }

    fn k(x: i64) -> Term {
        Term::Const(int(x))
    }

    #[test]
    fn unit_box_bounds() {
        let b = vec![Some(Interval::new(int(0), int(1))); 2];
        let f = encode_input_bounds(&b, &VariableNamer::inputs(2));
        assert_eq!(
            f,
            Formula::And(vec![
                Formula::cmp(k(0), CmpOp::Le, v("x1")),
                Formula::cmp(v("x1"), CmpOp::Le, k(1)),
                Formula::cmp(k(0), CmpOp::Le, v("x2")),
                Formula::cmp(v("x2"), CmpOp::Le, k(1)),
            ])
        );
        assert_eq!(encode_input_bounds(&[None, None], &VariableNamer::inputs(2)), Formula::True);
    }

    #[test]
    fn mpc_bounds_have_twelve_conjuncts() {
        let net = mpc_shaped();
        let f = encode_input_bounds(&net.input_bounds, &VariableNamer::inputs(6));
        assert_eq!(f.conjuncts().len(), 12);
        assert_eq!(f.conjuncts()[0], Formula::cmp(k(-2), CmpOp::Le, v("x1")));
        assert_eq!(f.conjuncts()[1], Formula::cmp(v("x1"), CmpOp::Le, k(2)));
    }

    #[test]
    fn worked_hidden_affine() {
        let net = worked();
        let f = encode_affine(&net.layers[0], &names(&["x1", "x2"]), &names(&["z1", "z2"])).unwrap();
        // z1 = −2·x1 + x2 + 1, z2 = x1 + 2·x2 + 1
        assert_eq!(
            f,
            Formula::And(vec![
                Formula::eq(
                    v("z1"),
                    Term::Sum(vec![Term::scaled(int(-2), v("x1")), v("x2"), k(1)])
                ),
                Formula::eq(
                    v("z2"),
                    Term::Sum(vec![v("x1"), Term::scaled(int(2), v("x2")), k(1)])
                ),
            ])
        );
    }

    #[test]
    fn worked_output_affine() {
        let net = worked();
        let f = encode_affine(&net.layers[1], &names(&["h1", "h2"]), &names(&["y1", "y2"])).unwrap();
        assert_eq!(
            f.conjuncts()[0],
            Formula::eq(
                v("y1"),
                Term::Sum(vec![Term::scaled(int(2), v("h1")), Term::scaled(int(-1), v("h2")), k(2)])
            )
        );
        assert_eq!(
            f.conjuncts()[1],
            Formula::eq(
                v("y2"),
                Term::Sum(vec![Term::scaled(int(-1), v("h1")), Term::scaled(int(-2), v("h2")), k(2)])
            )
        );
    }

    #[test]
    fn zero_layer_is_zero_equality() {
        let layer = Layer {
            weights: vec![vec![int(0)]],
            biases: vec![int(0)],
            activation: Activation::Linear,
        };
        let f = encode_affine(&layer, &names(&["x1"]), &names(&["z1"])).unwrap();
        assert_eq!(f, Formula::eq(v("z1"), k(0)));
    }

    #[test]
    fn affine_rejects_width_mismatch() {
        let net = worked();
        assert!(matches!(
            encode_affine(&net.layers[0], &names(&["x1"]), &names(&["z1", "z2"])),
            Err(EncodeError::InputWidth { expected: 2, actual: 1, .. })
        ));
    }

    #[test]
    fn relu_single_node() {
        let f = encode_relu(&names(&["z1"]), &names(&["h1"]));
        assert_eq!(
            f,
            Formula::Or(vec![
                Formula::And(vec![
                    Formula::cmp(v("z1"), CmpOp::Ge, k(0)),
                    Formula::eq(v("h1"), v("z1"))
                ]),
                Formula::And(vec![
                    Formula::cmp(v("z1"), CmpOp::Lt, k(0)),
                    Formula::eq(v("h1"), k(0))
                ]),
            ])
        );
        let z: Vec<String> = (1..=5).map(|j| format!("z{j}")).collect();
        let h: Vec<String> = (1..=5).map(|j| format!("h{j}")).collect();
        let f = encode_relu(&z, &h);
        assert_eq!(f.conjuncts().len(), 5);
        assert_eq!(f.disjunction_count(), 5);
    }

    /// Brute force over candidate `h` values: which satisfy the encoding for a fixed `z`?
    fn satisfying_h(f: &Formula, z: Rational, candidates: &[Rational]) -> Vec<Rational> {
        candidates
            .iter()
            .filter(|h| {
                let env: Assignment = [
                    ("z1".to_string(), z.clone()),
                    ("h1".to_string(), (*h).clone()),
                ]
                .into_iter()
                .collect();
                f.eval(&env).unwrap()
            })
            .cloned()
            .collect()
    }

    #[test]
    fn activation_encodings_are_functional() {
        let candidates: Vec<Rational> = (-12..=12).map(|n| ratio(n, 4)).collect();
        let relu = encode_relu(&names(&["z1"]), &names(&["h1"]));
        let ht = encode_hardtanh(&names(&["z1"]), &names(&["h1"]));
        assert_eq!(satisfying_h(&relu, int(-1), &candidates), vec![int(0)]);
        assert_eq!(satisfying_h(&ht, int(3), &candidates), vec![int(1)]);
        assert_eq!(satisfying_h(&ht, int(0), &candidates), vec![int(0)]);
        assert_eq!(satisfying_h(&ht, int(-1), &candidates), vec![int(-1)]);
        assert_eq!(satisfying_h(&ht, ratio(1, 2), &candidates), vec![ratio(1, 2)]);
    }

    #[test]
    fn abs_is_functional_and_fresh() {
        let mut namer = VariableNamer::new("r");
        let (a, f) = encode_abs(v("x"), &mut namer);
        let (b, _) = encode_abs(k(0), &mut namer);
        assert_ne!(a, b);
        assert_eq!(namer.issued_aux(), &[a.clone(), b.clone()]);
        for (x, expect) in [(-3, 3), (0, 0), (5, 5)] {
            for cand in -6..=6 {
                let env: Assignment = [("x".to_string(), int(x)), (a.clone(), int(cand))]
                    .into_iter()
                    .collect();
                assert_eq!(f.eval(&env).unwrap(), cand == expect);
            }
        }
    }

    #[test]
    fn worked_network_structure() {
        let net = worked();
        let mut namer = VariableNamer::new("a");
        let enc = encode_network(&net, &mut namer, &VariableNamer::inputs(2)).unwrap();
        assert_eq!(enc.outputs, names(&["a_y1", "a_y2"]));
        // 2 affine equalities, 2 ReLU disjunctions, 2 output equalities.
        let cs = enc.formula.conjuncts();
        assert_eq!(cs.len(), 6);
        assert_eq!(cs.iter().filter(|c| matches!(c, Formula::Or(_))).count(), 2);
        assert_eq!(
            enc.internal_vars().cloned().collect::<Vec<_>>(),
            names(&["a_l1_z1", "a_l1_z2", "a_l1_h1", "a_l1_h2"])
        );
    }

    #[test]
    fn identity_network_is_single_equality() {
        let net = Network::new(
            "id",
            1,
            vec![Layer {
                weights: vec![vec![int(1)]],
                biases: vec![int(0)],
                activation: Activation::Linear,
            }],
            vec![],
            None,
        )
        .unwrap();
        let enc = encode_network(&net, &mut VariableNamer::new("a"), &VariableNamer::inputs(1)).unwrap();
        assert_eq!(enc.formula, Formula::eq(v("a_y1"), v("x1")));
    }

    #[test]
    fn mpc_structure_counts() {
        let net = mpc_shaped();
        let enc = encode_network(&net, &mut VariableNamer::new("a"), &VariableNamer::inputs(6)).unwrap();
        let cs = enc.formula.conjuncts();
        let relu = cs.iter().filter(|c| matches!(c, Formula::Or(d) if d.len() == 2)).count();
        let htanh = cs.iter().filter(|c| matches!(c, Formula::Or(d) if d.len() == 3)).count();
        let eqs: Vec<&Formula> = cs.iter().filter(|c| matches!(c, Formula::Cmp(..))).collect();
        assert_eq!(relu, 135);
        assert_eq!(htanh, 1);
        // 135 hidden + 1 output affine equality, plus the scale equality.
        assert_eq!(eqs.len(), 137);
        assert_eq!(
            *eqs.last().unwrap(),
            &Formula::eq(v("a_y1"), Term::scaled(ratio(104, 100), v("a_l4_h1")))
        );
    }

    #[test]
    fn trace_satisfies_encoding() {
        for net in [worked(), mpc_shaped()] {
            let enc = encode_network(&net, &mut VariableNamer::new("a"), &VariableNamer::inputs(net.input_dim)).unwrap();
            for seed in 0..20 {
                let x: Vec<Rational> = (0..net.input_dim)
                    .map(|j| ratio(((seed * 7 + j as i64 * 3) % 11) - 5, 4))
                    .collect();
                let trace = forward_trace(&net, &x).unwrap();
                let mut env = enc.assignment_from_trace(&trace);
                env.extend(VariableNamer::inputs(net.input_dim).into_iter().zip(x));
                assert!(enc.formula.eval(&env).unwrap());
                // Every variable of the formula received a value.
                assert!(enc.formula.variables().iter().all(|v| env.contains_key(*v)));
            }
        }
    }

    #[test]
    fn encodings_are_linear() {
        let enc = encode_network(&mpc_shaped(), &mut VariableNamer::new("a"), &VariableNamer::inputs(6)).unwrap();
        enc.formula.for_each_atom(&mut |a, _, b| {
            assert!(a.degree() <= 1 && b.degree() <= 1);
        });
    }

    #[test]
    fn ite_encodings_admit_the_same_h() {
        let candidates: Vec<Rational> = (-12..=12).map(|n| ratio(n, 4)).collect();
        let (z, h) = (names(&["z1"]), names(&["h1"]));
        let pairs = [
            (encode_relu(&z, &h), encode_relu_ite(&z, &h)),
            (encode_hardtanh(&z, &h), encode_hardtanh_ite(&z, &h)),
        ];
        for (disj, ite) in &pairs {
            for zv in &candidates {
                assert_eq!(
                    satisfying_h(disj, zv.clone(), &candidates),
                    satisfying_h(ite, zv.clone(), &candidates)
                );
            }
        }
    }

    #[test]
    fn ite_network_has_no_disjunctions_and_accepts_traces() {
        for net in [worked(), mpc_shaped()] {
            let inputs = VariableNamer::inputs(net.input_dim);
            let enc = encode_network_with(&net, &mut VariableNamer::new("a"), &inputs, ActivationEncoding::Ite)
                .unwrap();
            let disj = encode_network(&net, &mut VariableNamer::new("a"), &inputs).unwrap();
            assert_eq!(enc.formula.disjunction_count(), 0);
            assert_eq!(enc.formula.conjuncts().len(), disj.formula.conjuncts().len());
            assert_eq!(enc.layers, disj.layers);
            enc.formula.for_each_atom(&mut |a, _, b| assert!(a.degree() <= 1 && b.degree() <= 1));
            for seed in 0..10 {
                let x: Vec<Rational> = (0..net.input_dim)
                    .map(|j| ratio(((seed * 5 + j as i64 * 7) % 13) - 6, 3))
                    .collect();
                let trace = forward_trace(&net, &x).unwrap();
                let mut env = enc.assignment_from_trace(&trace);
                env.extend(inputs.iter().cloned().zip(x));
                assert!(enc.formula.eval(&env).unwrap());
                // Nudging any activation variable breaks the formula.
                if let Some(h) = enc.layers[0].activation.as_ref().and_then(|h| h.first()) {
                    *env.get_mut(h).unwrap() += ratio(1, 7);
                    assert!(!enc.formula.eval(&env).unwrap());
                }
            }
        }
    }
}
