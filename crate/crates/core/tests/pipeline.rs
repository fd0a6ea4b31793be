//! End-to-end checks of the query pipeline without an external solver.

use nnequiv_core::encoder::{encode_network_with, ActivationEncoding, VariableNamer};
use nnequiv_core::eval::forward_trace;
use nnequiv_core::fixtures::{worked, worked_bias_shifted};
use nnequiv_core::oracle::{exhaustive_check, DiscreteDomain, OracleVerdict, DEFAULT_BUDGET};
use nnequiv_core::perturbation::{perturb, PerturbationSpec};
use nnequiv_core::rational::{int, ratio, to_exact_decimal};
use nnequiv_core::smtlib::{parse_model, serialize_smtlib, split_response, CheckSat};
use nnequiv_core::synth::{random_network, rng, NetShape};
use nnequiv_core::{
    build_query_with, certify, relation_violated_at, Assignment, CertifyError, EquivalenceRelation, Interval,
    Network, QueryOptions, Rational,
};
use proptest::prelude::*;

/// Solver-style response carrying only the input values.
fn response(x: &[Rational]) -> String {
    let defs: Vec<String> = x
        .iter()
        .enumerate()
        .map(|(j, v)| {
            let lit = to_exact_decimal(v).expect("terminating decimal");
            format!("(define-fun x{} () Real {lit})", j + 1)
        })
        .collect();
    format!("sat\n({})\n", defs.join(" "))
}

fn model_of(text: &str) -> Assignment {
    let (answer, rest) = split_response(text).unwrap();
    assert_eq!(answer, CheckSat::Sat);
    parse_model(rest).unwrap().values
}

#[test]
fn oracle_witness_round_trips_through_a_solver_response() {
    let (a, b) = (worked(), worked_bias_shifted());
    let rel = EquivalenceRelation::Strict;
    let verdict = exhaustive_check(&a, &b, &rel, &DiscreteDomain::bits(2), DEFAULT_BUDGET).unwrap();
    let OracleVerdict::Violated { input, .. } = verdict else {
        panic!("bias shift must be visible on the grid");
    };
    let cex = certify(&a, &b, &rel, &model_of(&response(&input))).unwrap();
    assert_eq!(cex.input, input);
    assert_eq!(&cex.outputs_b[0] - &cex.outputs_a[0], int(1));
    assert!(cex.bounds_respected);
}

#[test]
fn replay_rejects_a_point_where_the_networks_agree() {
    let a = worked();
    let model = model_of(&response(&[int(0), int(0)]));
    let err = certify(&a, &a, &EquivalenceRelation::Strict, &model).unwrap_err();
    assert!(matches!(err, CertifyError::Rejected { .. }), "{err:?}");
}

#[test]
fn zero_change_perturbation_serializes_like_the_original() {
    let a = worked();
    let (copy, log) = perturb(&a, &PerturbationSpec::new(0, 3)).unwrap();
    assert!(log.is_empty());
    let opts = QueryOptions::default();
    let rel = EquivalenceRelation::Argmax;
    let q1 = build_query_with(&a, &a, &rel, &opts).unwrap();
    let q2 = build_query_with(&a, &copy, &rel, &opts).unwrap();
    assert_eq!(serialize_smtlib(&q1), serialize_smtlib(&q2));
}

fn small_net(seed: u64) -> Network {
    let mut r = rng(seed);
    let depth = 1 + (seed % 2) as usize;
    let hidden: Vec<usize> = (0..depth).map(|d| 2 + ((seed as usize + d) % 4)).collect();
    let bounds = vec![Some(Interval::new(int(-1), int(1))); 3];
    random_network(&mut r, &NetShape::new(3, &hidden, 3), Some(bounds))
}

/// Assignment the honest evaluation of both networks induces on the query.
fn honest_env(a: &Network, b: &Network, x: &[Rational], enc: ActivationEncoding) -> Assignment {
    let inputs = VariableNamer::inputs(a.input_dim);
    let mut env: Assignment = inputs.iter().cloned().zip(x.iter().cloned()).collect();
    for (net, prefix) in [(a, "a"), (b, "b")] {
        let e = encode_network_with(net, &mut VariableNamer::new(prefix), &inputs, enc).unwrap();
        env.extend(e.assignment_from_trace(&forward_trace(net, x).unwrap()));
    }
    env
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The honest trace satisfies the query exactly when the relation is
    /// violated at that point, under either activation encoding.
    #[test]
    fn query_holds_on_trace_iff_relation_violated(
        seed in 0u64..500,
        pert in 0u64..3,
        xs in proptest::collection::vec(-4i64..=4, 3),
        rel_pick in 0usize..3,
        ite in any::<bool>(),
    ) {
        let a = small_net(seed);
        let spec = PerturbationSpec::new(pert as usize, seed).with_range(ratio(1, 4), ratio(1, 2));
        let (b, _) = perturb(&a, &spec).unwrap();
        let rel = [EquivalenceRelation::Strict, EquivalenceRelation::Argmax, EquivalenceRelation::TopK(2)][rel_pick].clone();
        let enc = if ite { ActivationEncoding::Ite } else { ActivationEncoding::Disjunctive };
        let opts = QueryOptions { activation_encoding: enc, ..QueryOptions::default() };
        let q = build_query_with(&a, &b, &rel, &opts).unwrap();
        let x: Vec<Rational> = xs.iter().map(|&v| ratio(v, 4)).collect();
        let env = honest_env(&a, &b, &x, enc);
        let ya = forward_trace(&a, &x).unwrap().outputs;
        let yb = forward_trace(&b, &x).unwrap().outputs;
        let violated = relation_violated_at(&rel, &ya, &yb).unwrap().is_some();
        prop_assert_eq!(q.formula().eval(&env).unwrap(), violated);
    }
}
