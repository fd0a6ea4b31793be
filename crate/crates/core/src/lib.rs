//! Core of an SMT-based equivalence checker for feedforward networks.
//!
//! Two networks and the negation of an equivalence relation are compiled
//! into one quantifier-free linear real arithmetic query. The query is
//! unsatisfiable exactly when the networks are equivalent on the shared
//! input domain; a satisfying model is an input on which they disagree,
//! and [`counterexample::certify`] confirms it by exact replay.
//!
//! This crate is `no_std` (it needs `alloc`). Process management, model
//! files and the command line live in the `nnequiv` crate.

#![no_std]

extern crate alloc;

pub mod counterexample;
pub mod encoder;
pub mod equivalence;
pub mod eval;
pub mod fixtures;
pub mod formula;
pub mod model;
pub mod oracle;
pub mod perturbation;
pub mod rational;
pub mod smtlib;
pub mod synth;

pub use counterexample::{certify, CertifyError, Counterexample};
pub use equivalence::{build_query, build_query_with, EquivalenceRelation, Query, QueryError, QueryOptions};
pub use eval::{argmax, argsort, distance, forward, relation_violated_at, Norm, Witness};
pub use formula::{Assignment, Formula, Term};
pub use model::{Activation, InputBounds, Interval, Layer, Network, Violation};
pub use rational::Rational;
