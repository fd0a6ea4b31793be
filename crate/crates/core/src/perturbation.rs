//! Derives a second network by altering a few parameters of a first one.

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{Float, Signed, ToPrimitive};
use rand::seq::index;
use rand::Rng;
use thiserror::Error;

use crate::model::{Network, ParamPosition};
use crate::rational::{ratio, to_f64, Rational};
use crate::synth::rng;

/// Drawn magnitudes are multiples of `10^-PRECISION`.
pub const PRECISION: u32 = 9;
const SCALE: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampling {
    #[default]
    Uniform,
    /// Uniform in the logarithm of the magnitude.
    LogUniform,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerturbationSpec {
    /// Number of distinct scalar parameters to change.
    pub count: usize,
    /// Smallest absolute change.
    pub lo: Rational,
    /// Largest absolute change.
    pub hi: Rational,
    pub seed: u64,
    /// Leave biases untouched.
    pub weights_only: bool,
    pub sampling: Sampling,
}

impl PerturbationSpec {
    pub fn new(count: usize, seed: u64) -> Self {
        PerturbationSpec {
            count,
            lo: ratio(1, 1_000_000),
            hi: ratio(1, 10),
            seed,
            weights_only: false,
            sampling: Sampling::Uniform,
        }
    }

    pub fn with_range(mut self, lo: Rational, hi: Rational) -> Self {
        self.lo = lo;
        self.hi = hi;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PerturbationError {
    #[error("lower magnitude must be positive")]
    NonPositiveLower,
    #[error("lower magnitude exceeds upper magnitude")]
    InvertedRange,
    #[error("range contains no multiple of 1e-9")]
    BelowResolution,
    #[error("range upper end is too large")]
    RangeTooLarge,
    #[error("cannot change {count} parameters, only {available} eligible")]
    TooMany { count: usize, available: usize },
}

/// One altered parameter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Change {
    pub position: ParamPosition,
    pub old: Rational,
    pub new: Rational,
}

fn nanos_range(spec: &PerturbationSpec) -> Result<(u64, u64), PerturbationError> {
    if !spec.lo.is_positive() {
        return Err(PerturbationError::NonPositiveLower);
    }
    if spec.lo > spec.hi {
        return Err(PerturbationError::InvertedRange);
    }
    let scale = Rational::from_integer(BigInt::from(SCALE));
    let lo = (&spec.lo * &scale).ceil().to_integer();
    let hi = (&spec.hi * &scale).floor().to_integer();
    if lo > hi {
        return Err(PerturbationError::BelowResolution);
    }
    let lo = lo.to_u64().ok_or(PerturbationError::RangeTooLarge)?;
    let hi = hi.to_u64().ok_or(PerturbationError::RangeTooLarge)?;
    Ok((lo, hi))
}

fn draw_nanos<R: Rng>(r: &mut R, lo: u64, hi: u64, sampling: Sampling) -> u64 {
    match sampling {
        Sampling::Uniform => r.random_range(lo..=hi),
        Sampling::LogUniform => {
            let (a, b) = (Float::ln(lo as f64), Float::ln(hi as f64));
            let u: f64 = r.random();
            let v = Float::round(Float::exp(a + u * (b - a))) as u64;
            v.clamp(lo, hi)
        }
    }
}

/// Returns a copy of `net` with exactly `spec.count` distinct parameters
/// shifted by a random sign times a magnitude in `[lo, hi]`, plus the list
/// of changes in parameter order. The same spec always gives the same result.
pub fn perturb(net: &Network, spec: &PerturbationSpec) -> Result<(Network, Vec<Change>), PerturbationError> {
    let (lo, hi) = nanos_range(spec)?;
    let eligible: Vec<ParamPosition> = net
        .parameter_positions()
        .filter(|p| !spec.weights_only || p.kind == crate::model::ParamKind::Weight)
        .collect();
    if spec.count > eligible.len() {
        return Err(PerturbationError::TooMany {
            count: spec.count,
            available: eligible.len(),
        });
    }
    let mut r = rng(spec.seed);
    let mut picked: Vec<usize> = index::sample(&mut r, eligible.len(), spec.count).into_vec();
    picked.sort_unstable();

    let mut out = net.clone();
    let mut changes = Vec::with_capacity(picked.len());
    let scale = BigInt::from(SCALE);
    for i in picked {
        let position = eligible[i];
        let nanos = draw_nanos(&mut r, lo, hi, spec.sampling);
        let mut delta = Rational::new(BigInt::from(nanos), scale.clone());
        if r.random::<bool>() {
            delta = -delta;
        }
        let slot = out.param_mut(&position);
        let old = slot.clone();
        *slot += delta;
        changes.push(Change {
            position,
            old,
            new: slot.clone(),
        });
    }
    Ok((out, changes))
}

/// Positions where two equally shaped networks differ.
pub fn differing_positions(a: &Network, b: &Network) -> Vec<ParamPosition> {
    a.parameter_positions()
        .filter(|p| a.param(p) != b.param(p))
        .collect()
}

/// Magnitude of a change as `f64`, for reporting.
pub fn magnitude(change: &Change) -> f64 {
    to_f64(&(&change.new - &change.old).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{worked, mpc_shaped};
    use alloc::vec;

    #[test]
    fn zero_count_is_identity() {
        let net = worked();
        let (p, log) = perturb(&net, &PerturbationSpec::new(0, 1)).unwrap();
        assert_eq!(p, net);
        assert!(log.is_empty());
    }

    #[test]
    fn single_change_within_range() {
        let net = mpc_shaped();
        for seed in 0..20 {
            let (p, log) = perturb(&net, &PerturbationSpec::new(1, seed)).unwrap();
            assert_eq!(log.len(), 1);
            assert_eq!(differing_positions(&net, &p), vec![log[0].position]);
            let m = (&log[0].new - &log[0].old).abs();
            assert!(m >= ratio(1, 1_000_000) && m <= ratio(1, 10));
            assert_eq!(p.param_count(), net.param_count());
        }
    }

    #[test]
    fn two_changes_are_distinct() {
        let net = worked();
        for seed in 0..50 {
            let (p, log) = perturb(&net, &PerturbationSpec::new(2, seed)).unwrap();
            assert_ne!(log[0].position, log[1].position);
            assert_eq!(differing_positions(&net, &p).len(), 2);
        }
    }

    #[test]
    fn same_seed_same_result() {
        let net = mpc_shaped();
        let spec = PerturbationSpec::new(5, 7);
        assert_eq!(perturb(&net, &spec).unwrap(), perturb(&net, &spec).unwrap());
        let other = PerturbationSpec::new(5, 8);
        assert_ne!(perturb(&net, &spec).unwrap().1, perturb(&net, &other).unwrap().1);
    }

    #[test]
    fn fixed_magnitude_and_weights_only() {
        let net = worked();
        let mut spec = PerturbationSpec::new(8, 3).with_range(ratio(1, 10), ratio(1, 10));
        spec.weights_only = true;
        let (_, log) = perturb(&net, &spec).unwrap();
        assert_eq!(log.len(), 8);
        for c in &log {
            assert_eq!(c.position.kind, crate::model::ParamKind::Weight);
            assert_eq!((&c.new - &c.old).abs(), ratio(1, 10));
        }
        spec.count = 9;
        assert_eq!(
            perturb(&net, &spec),
            Err(PerturbationError::TooMany { count: 9, available: 8 })
        );
    }

    #[test]
    fn log_uniform_stays_in_range() {
        let net = mpc_shaped();
        let mut spec = PerturbationSpec::new(40, 11);
        spec.sampling = Sampling::LogUniform;
        let (_, log) = perturb(&net, &spec).unwrap();
        for c in &log {
            let m = (&c.new - &c.old).abs();
            assert!(m >= ratio(1, 1_000_000) && m <= ratio(1, 10));
        }
    }

    #[test]
    fn invalid_specs() {
        let net = worked();
        let bad = |lo, hi| perturb(&net, &PerturbationSpec::new(1, 0).with_range(lo, hi));
        assert_eq!(bad(ratio(0, 1), ratio(1, 10)), Err(PerturbationError::NonPositiveLower));
        assert_eq!(bad(ratio(1, 2), ratio(1, 10)), Err(PerturbationError::InvertedRange));
        assert_eq!(
            bad(ratio(1, 10_000_000_000), ratio(2, 10_000_000_000)),
            Err(PerturbationError::BelowResolution)
        );
    }
}
