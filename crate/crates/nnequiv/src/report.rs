//! The JSON document written by `nnequiv check`.
//!
//! Layout is described by `schema/check-report.schema.json`.

use nnequiv_core::eval::{Norm, Witness};
use nnequiv_core::rational::{to_approx_string, to_exact_string};
use nnequiv_core::{Counterexample, EquivalenceRelation, Network, Rational};
use serde::{Deserialize, Serialize};

pub const REPORT_VERSION: u32 = 1;
const APPROX_PLACES: u32 = 9;

/// A rational with its decimal approximation alongside.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Number {
    pub exact: String,
    pub approx: String,
}

impl Number {
    pub fn of(r: &Rational) -> Self {
        Number {
            exact: to_exact_string(r),
            approx: to_approx_string(r, APPROX_PLACES),
        }
    }
}

pub fn numbers(v: &[Rational]) -> Vec<Number> {
    v.iter().map(Number::of).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationInfo {
    pub tag: String,
    pub epsilon: Option<String>,
    pub k: Option<usize>,
}

impl RelationInfo {
    pub fn of(rel: &EquivalenceRelation) -> Self {
        RelationInfo {
            tag: rel.tag().to_owned(),
            epsilon: rel.epsilon().map(to_exact_string),
            k: rel.k(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkInfo {
    pub name: String,
    pub path: String,
    pub params: usize,
    pub inputs: usize,
    pub outputs: usize,
}

impl NetworkInfo {
    pub fn of(net: &Network, path: &str) -> Self {
        NetworkInfo {
            name: net.name.clone(),
            path: path.to_owned(),
            params: net.param_count(),
            inputs: net.input_dim,
            outputs: net.output_dim(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Networks {
    pub a: NetworkInfo,
    pub b: NetworkInfo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variables {
    pub input: usize,
    pub internal: usize,
    pub output: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certification {
    Certified,
    Rejected,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessInfo {
    pub kind: String,
    pub description: String,
    /// 1-based output coordinate or argsort position, when there is one.
    pub index: Option<usize>,
}

impl WitnessInfo {
    pub fn of(w: &Witness) -> Self {
        let (kind, index) = match w {
            Witness::Coordinate { index, .. } => ("coordinate", Some(*index)),
            Witness::Distance { norm: Norm::L1, index, .. } => ("l1_distance", Some(*index)),
            Witness::Distance { norm: Norm::LInf, index, .. } => ("linf_distance", Some(*index)),
            Witness::Argmax { .. } => ("argmax", None),
            Witness::Rank { position, .. } => ("rank", Some(*position)),
        };
        WitnessInfo {
            kind: kind.to_owned(),
            description: w.to_string(),
            index,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterexampleInfo {
    pub input: Vec<Number>,
    pub outputs_a: Vec<Number>,
    pub outputs_b: Vec<Number>,
    pub witness: WitnessInfo,
    pub bounds_respected: bool,
}

impl CounterexampleInfo {
    pub fn of(c: &Counterexample) -> Self {
        CounterexampleInfo {
            input: numbers(&c.input),
            outputs_a: numbers(&c.outputs_a),
            outputs_b: numbers(&c.outputs_b),
            witness: WitnessInfo::of(&c.witness),
            bounds_respected: c.bounds_respected,
        }
    }
}

/// Replayed values of a model that failed certification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectionInfo {
    pub reason: String,
    pub input: Vec<Number>,
    pub outputs_a: Vec<Number>,
    pub outputs_b: Vec<Number>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub report_version: u32,
    pub tool_version: String,
    pub relation: RelationInfo,
    pub networks: Networks,
    pub variables: Variables,
    pub bounds_asserted: bool,
    pub grid_mode: bool,
    pub activation_encoding: String,
    /// One of unsat, sat, timeout, memout, unknown, solver_error.
    pub verdict: String,
    pub verdict_detail: Option<String>,
    pub wall_clock_seconds: f64,
    pub timeout_seconds: f64,
    pub mem_limit_mib: Option<u64>,
    pub solver: String,
    pub solver_args: Vec<String>,
    pub query_file: Option<String>,
    pub certification: Certification,
    pub counterexample: Option<CounterexampleInfo>,
    pub rejection: Option<RejectionInfo>,
    pub warnings: Vec<String>,
    pub exit_code: i32,
}

impl CheckReport {
    /// Copy with timing fields zeroed, for comparing runs.
    pub fn without_timing(&self) -> CheckReport {
        CheckReport {
            wall_clock_seconds: 0.0,
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
