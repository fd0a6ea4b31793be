//! Certification of solver models by exact replay through both networks.
//!
//! Reported outputs always come from the evaluator, never from the solver's
//! model, so a disagreement between the encoding and the real network
//! surfaces as a rejection.

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::encoder::VariableNamer;
use crate::equivalence::EquivalenceRelation;
use crate::eval::{forward, relation_violated_at, EvalError, Witness};
use crate::formula::Assignment;
use crate::model::Network;
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub input: Vec<Rational>,
    pub outputs_a: Vec<Rational>,
    pub outputs_b: Vec<Rational>,
    pub relation: EquivalenceRelation,
    pub witness: Witness,
    /// Whether `input` lies inside both networks' declared bounds.
    pub bounds_respected: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CertifyError {
    #[error("solver model has no value for input `{0}`")]
    MissingInput(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    /// The model's input does not violate the relation when replayed.
    #[error("model does not replay to a violation of {relation}")]
    Rejected {
        relation: EquivalenceRelation,
        input: Vec<Rational>,
        outputs_a: Vec<Rational>,
        outputs_b: Vec<Rational>,
    },
}

/// Reads `x1..xn` from a model, ignoring every other symbol.
pub fn extract_input(model: &Assignment, n: usize) -> Result<Vec<Rational>, CertifyError> {
    (1..=n)
        .map(|j| {
            let name = VariableNamer::input(j);
            model
                .get(&name)
                .cloned()
                .ok_or(CertifyError::MissingInput(name))
        })
        .collect()
}

/// Replays the model's input through both networks and accepts only if the
/// relation is really violated there.
pub fn certify(
    a: &Network,
    b: &Network,
    rel: &EquivalenceRelation,
    model: &Assignment,
) -> Result<Counterexample, CertifyError> {
    let input = extract_input(model, a.input_dim)?;
    certify_input(a, b, rel, input)
}

/// Like [`certify`] for an input vector that is already known.
pub fn certify_input(
    a: &Network,
    b: &Network,
    rel: &EquivalenceRelation,
    input: Vec<Rational>,
) -> Result<Counterexample, CertifyError> {
    let outputs_a = forward(a, &input)?;
    let outputs_b = forward(b, &input)?;
    match relation_violated_at(rel, &outputs_a, &outputs_b)? {
        Some(witness) => Ok(Counterexample {
            bounds_respected: a.within_bounds(&input) && b.within_bounds(&input),
            input,
            outputs_a,
            outputs_b,
            relation: rel.clone(),
            witness,
        }),
        None => Err(CertifyError::Rejected {
            relation: rel.clone(),
            input,
            outputs_a,
            outputs_b,
        }),
    }
}

impl Counterexample {
    /// Re-runs certification on this counterexample's own input.
    pub fn recertify(&self, a: &Network, b: &Network) -> Result<Counterexample, CertifyError> {
        certify_input(a, b, &self.relation, self.input.clone())
    }
}
