//! Ground-truth equivalence by exhaustive enumeration of a finite input
//! domain. Used to validate the SMT pipeline on small instances.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::equivalence::EquivalenceRelation;
use crate::eval::{forward, relation_violated_at, EvalError, Witness};
use crate::model::Network;
use crate::rational::{int, to_exact_string, Rational};

/// Default cap on the number of enumerated points.
pub const DEFAULT_BUDGET: u128 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("domain has {size} points, budget is {budget}")]
    BudgetExceeded { size: u128, budget: u128 },
    #[error("grid step must be positive")]
    NonPositiveStep,
    #[error("grid lower end exceeds upper end")]
    EmptyGrid,
    #[error("domain has {actual} features, networks have {expected}")]
    Dimension { expected: usize, actual: usize },
    #[error("feature {feature}: value {} lies outside the bounds of network {network}", to_exact_string(.value))]
    OutOfBounds {
        feature: usize,
        value: Rational,
        network: alloc::string::String,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Finite value list per input feature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteDomain {
    features: Vec<Vec<Rational>>,
}

impl DiscreteDomain {
    pub fn new(features: Vec<Vec<Rational>>) -> Self {
        DiscreteDomain { features }
    }

    /// `{0, 1}` for each of `n` features.
    pub fn bits(n: usize) -> Self {
        DiscreteDomain::new(vec![vec![int(0), int(1)]; n])
    }

    /// `lo, lo + step, …` up to and including `hi` when it lies on the grid.
    pub fn grid_values(lo: &Rational, hi: &Rational, step: &Rational) -> Result<Vec<Rational>, OracleError> {
        if !step.is_positive() {
            return Err(OracleError::NonPositiveStep);
        }
        if lo > hi {
            return Err(OracleError::EmptyGrid);
        }
        let mut out = Vec::new();
        let mut v = lo.clone();
        while &v <= hi {
            out.push(v.clone());
            v += step;
        }
        Ok(out)
    }

    /// The same arithmetic grid on each of `n` features.
    pub fn uniform_grid(n: usize, lo: &Rational, hi: &Rational, step: &Rational) -> Result<Self, OracleError> {
        let values = Self::grid_values(lo, hi, step)?;
        Ok(DiscreteDomain::new(vec![values; n]))
    }

    pub fn dims(&self) -> usize {
        self.features.len()
    }

    pub fn features(&self) -> &[Vec<Rational>] {
        &self.features
    }

    /// Product of per-feature counts; `None` on overflow.
    pub fn cardinality(&self) -> Option<u128> {
        self.features
            .iter()
            .try_fold(1u128, |acc, f| acc.checked_mul(f.len() as u128))
    }

    /// Lexicographic stream of every tuple, refusing domains over `budget`.
    pub fn enumerate(&self, budget: u128) -> Result<Points<'_>, OracleError> {
        let size = self.cardinality().unwrap_or(u128::MAX);
        if size > budget {
            return Err(OracleError::BudgetExceeded { size, budget });
        }
        Ok(Points {
            domain: self,
            counters: vec![0; self.features.len()],
            done: size == 0,
        })
    }
}

/// Odometer over a [`DiscreteDomain`]; the last feature varies fastest.
#[derive(Debug, Clone)]
pub struct Points<'a> {
    domain: &'a DiscreteDomain,
    counters: Vec<usize>,
    done: bool,
}

impl Iterator for Points<'_> {
    type Item = Vec<Rational>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let point = self
            .counters
            .iter()
            .zip(&self.domain.features)
            .map(|(&c, vals)| vals[c].clone())
            .collect();
        let mut pos = self.counters.len();
        loop {
            if pos == 0 {
                self.done = true;
                break;
            }
            pos -= 1;
            self.counters[pos] += 1;
            if self.counters[pos] < self.domain.features[pos].len() {
                break;
            }
            self.counters[pos] = 0;
        }
        Some(point)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleVerdict {
    Equivalent { points: u128 },
    /// First violating point in enumeration order.
    Violated {
        input: Vec<Rational>,
        outputs_a: Vec<Rational>,
        outputs_b: Vec<Rational>,
        witness: Witness,
        /// 0-based position of `input` in the enumeration.
        index: u128,
    },
}

impl OracleVerdict {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, OracleVerdict::Equivalent { .. })
    }
}

fn check_domain(net: &Network, domain: &DiscreteDomain) -> Result<(), OracleError> {
    for (j, values) in domain.features().iter().enumerate() {
        if let Some(iv) = net.bound(j) {
            if let Some(v) = values.iter().find(|v| !iv.contains(v)) {
                return Err(OracleError::OutOfBounds {
                    feature: j + 1,
                    value: v.clone(),
                    network: net.name.clone(),
                });
            }
        }
    }
    Ok(())
}

/// Decides `rel` between `a` and `b` on every point of `domain`.
pub fn exhaustive_check(
    a: &Network,
    b: &Network,
    rel: &EquivalenceRelation,
    domain: &DiscreteDomain,
    budget: u128,
) -> Result<OracleVerdict, OracleError> {
    for net in [a, b] {
        if domain.dims() != net.input_dim {
            return Err(OracleError::Dimension {
                expected: net.input_dim,
                actual: domain.dims(),
            });
        }
        check_domain(net, domain)?;
    }
    let mut points = 0u128;
    for (index, x) in domain.enumerate(budget)?.enumerate() {
        let ya = forward(a, &x)?;
        let yb = forward(b, &x)?;
        if let Some(witness) = relation_violated_at(rel, &ya, &yb)? {
            return Ok(OracleVerdict::Violated {
                input: x,
                outputs_a: ya,
                outputs_b: yb,
                witness,
                index: index as u128,
            });
        }
        points += 1;
    }
    debug_assert!(points == domain.cardinality().unwrap_or(0) || points.is_zero());
    Ok(OracleVerdict::Equivalent { points })
}
