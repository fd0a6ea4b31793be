//! Negated equivalence relations and assembly of the full satisfiability
//! query for a pair of networks.
//!
//! The query is satisfiable exactly when some input in the shared domain
//! makes the two networks disagree under the chosen relation, so an
//! unsatisfiable query proves equivalence.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use num_traits::Signed;
use thiserror::Error;

use crate::encoder::{
    encode_abs, encode_input_bounds, encode_network_with, ActivationEncoding, EncodeError, VariableNamer,
};
use crate::formula::{CmpOp, Formula, Term};
use crate::model::{Interval, Network};
use crate::oracle::DiscreteDomain;
use crate::rational::{int, to_exact_string, Rational};

/// Relation under which two networks are compared.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum EquivalenceRelation {
    /// Outputs equal exactly.
    Strict,
    /// Sum of absolute output differences stays below epsilon.
    L1(Rational),
    /// Largest absolute output difference stays below epsilon.
    LInf(Rational),
    /// Same index of the maximum output.
    Argmax,
    /// Same first `k` entries of the decreasing argsort.
    TopK(usize),
}

impl EquivalenceRelation {
    pub fn tag(&self) -> &'static str {
        match self {
            EquivalenceRelation::Strict => "strict",
            EquivalenceRelation::L1(_) => "l1",
            EquivalenceRelation::LInf(_) => "linf",
            EquivalenceRelation::Argmax => "argmax",
            EquivalenceRelation::TopK(_) => "topk",
        }
    }

    pub fn epsilon(&self) -> Option<&Rational> {
        match self {
            EquivalenceRelation::L1(e) | EquivalenceRelation::LInf(e) => Some(e),
            _ => None,
        }
    }

    pub fn k(&self) -> Option<usize> {
        match self {
            EquivalenceRelation::TopK(k) => Some(*k),
            _ => None,
        }
    }

    /// Default L1 epsilon for classifier comparisons.
    pub fn default_l1_epsilon() -> Rational {
        int(5)
    }

    /// Default L∞ epsilon for classifier comparisons.
    pub fn default_linf_epsilon() -> Rational {
        int(10)
    }

    /// Checks the parameters against an output width `m`.
    pub fn check_for_outputs(&self, m: usize) -> Result<(), RelationError> {
        match self {
            EquivalenceRelation::L1(e) | EquivalenceRelation::LInf(e) if !e.is_positive() => {
                Err(RelationError::NonPositiveEpsilon(e.clone()))
            }
            EquivalenceRelation::Argmax if m < 2 => Err(RelationError::ArgmaxNeedsTwoOutputs { m }),
            EquivalenceRelation::TopK(k) if *k == 0 || *k > m => {
                Err(RelationError::KOutOfRange { k: *k, m })
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for EquivalenceRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EquivalenceRelation::L1(e) | EquivalenceRelation::LInf(e) => {
                write!(f, "{}(epsilon={})", self.tag(), to_exact_string(e))
            }
            EquivalenceRelation::TopK(k) => write!(f, "topk(k={k})"),
            _ => f.write_str(self.tag()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RelationError {
    #[error("epsilon must be positive, got {}", to_exact_string(.0))]
    NonPositiveEpsilon(Rational),
    #[error("argmax equivalence needs at least 2 outputs, networks have {m}")]
    ArgmaxNeedsTwoOutputs { m: usize },
    #[error("k must satisfy 1 <= k <= m = {m}, got k = {k}")]
    KOutOfRange { k: usize, m: usize },
    #[error("output vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("index {i} out of range 1..={m}")]
    IndexOutOfRange { i: usize, m: usize },
}

fn same_len(a: &[String], b: &[String]) -> Result<(), RelationError> {
    if a.len() != b.len() {
        Err(RelationError::LengthMismatch(a.len(), b.len()))
    } else {
        Ok(())
    }
}

fn var(s: &str) -> Term {
    Term::var(s)
}

/// `⋁_i yA_i ≠ yB_i`.
pub fn encode_strict_neq(ya: &[String], yb: &[String]) -> Result<Formula, RelationError> {
    same_len(ya, yb)?;
    Ok(Formula::or(ya.iter().zip(yb).map(|(a, b)| {
        Formula::cmp(var(a), CmpOp::Ne, var(b))
    })))
}

/// `Σ_i |yA_i − yB_i| ≥ ε`, one absolute-value auxiliary per output.
pub fn encode_l1_geq(
    ya: &[String],
    yb: &[String],
    epsilon: &Rational,
    namer: &mut VariableNamer,
) -> Result<Formula, RelationError> {
    same_len(ya, yb)?;
    let mut parts = Vec::with_capacity(ya.len() + 1);
    let mut abs_vars = Vec::with_capacity(ya.len());
    for (a, b) in ya.iter().zip(yb) {
        let (aux, f) = encode_abs(Term::minus(var(a), var(b)), namer);
        parts.push(f);
        abs_vars.push(aux);
    }
    let sum = if abs_vars.len() == 1 {
        var(&abs_vars[0])
    } else {
        Term::Sum(abs_vars.iter().map(|a| var(a)).collect())
    };
    parts.push(Formula::cmp(sum, CmpOp::Ge, Term::Const(epsilon.clone())));
    Ok(Formula::and(parts))
}

/// `⋁_i |yA_i − yB_i| ≥ ε`, one absolute-value auxiliary per output.
pub fn encode_linf_geq(
    ya: &[String],
    yb: &[String],
    epsilon: &Rational,
    namer: &mut VariableNamer,
) -> Result<Formula, RelationError> {
    same_len(ya, yb)?;
    let mut defs = Vec::with_capacity(ya.len());
    let mut alternatives = Vec::with_capacity(ya.len());
    for (a, b) in ya.iter().zip(yb) {
        let (aux, f) = encode_abs(Term::minus(var(a), var(b)), namer);
        defs.push(f);
        alternatives.push(Formula::cmp(var(&aux), CmpOp::Ge, Term::Const(epsilon.clone())));
    }
    defs.push(Formula::or(alternatives));
    Ok(Formula::and(defs))
}

/// `argmax(y) = i` with lowest-index tie-breaking:
/// `(⋀_{j<i} y_i > y_j) ∧ (⋀_{j>i} y_i ≥ y_j)`. `i` is 1-based.
pub fn encode_argmaxis(y: &[String], i: usize) -> Result<Formula, RelationError> {
    let m = y.len();
    if i == 0 || i > m {
        return Err(RelationError::IndexOutOfRange { i, m });
    }
    let yi = &y[i - 1];
    let below = (1..i).map(|j| Formula::cmp(var(yi), CmpOp::Gt, var(&y[j - 1])));
    let above = (i + 1..=m).map(|j| Formula::cmp(var(yi), CmpOp::Ge, var(&y[j - 1])));
    Ok(Formula::and(below.chain(above)))
}

/// `⋁_{i≠i'} argmaxis(yA, i) ∧ argmaxis(yB, i')`.
pub fn encode_argmax_neq(ya: &[String], yb: &[String]) -> Result<Formula, RelationError> {
    same_len(ya, yb)?;
    let m = ya.len();
    if m < 2 {
        return Err(RelationError::ArgmaxNeedsTwoOutputs { m });
    }
    let mut disjuncts = Vec::with_capacity(m * (m - 1));
    for i in 1..=m {
        for i2 in (1..=m).filter(|&i2| i2 != i) {
            disjuncts.push(Formula::And(vec_of(encode_argmaxis(ya, i)?, encode_argmaxis(yb, i2)?)));
        }
    }
    Ok(Formula::Or(disjuncts))
}

fn vec_of(a: Formula, b: Formula) -> Vec<Formula> {
    let mut v: Vec<Formula> = a.conjuncts().to_vec();
    v.extend_from_slice(b.conjuncts());
    v
}

/// `beats(j, i)`: index `j` sorts ahead of `i`. Ties favour the lower index,
/// so the comparison is `≥` when `j < i` and `>` otherwise.
fn beats(y: &[String], j: usize, i: usize) -> Formula {
    let op = if j < i { CmpOp::Ge } else { CmpOp::Gt };
    Formula::cmp(var(&y[j - 1]), op, var(&y[i - 1]))
}

fn not_beats(y: &[String], j: usize, i: usize) -> Formula {
    let op = if j < i { CmpOp::Lt } else { CmpOp::Le };
    Formula::cmp(var(&y[j - 1]), op, var(&y[i - 1]))
}

/// All size-`r` subsets of `items`, lexicographic.
fn combinations(items: &[usize], r: usize) -> Vec<Vec<usize>> {
    let n = items.len();
    if r > n {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..r).collect();
    loop {
        out.push(idx.iter().map(|&i| items[i]).collect());
        // Rightmost position that can still advance.
        let mut pos = r;
        while pos > 0 && idx[pos - 1] == pos - 1 + n - r {
            pos -= 1;
        }
        if pos == 0 {
            return out;
        }
        idx[pos - 1] += 1;
        for q in pos..r {
            idx[q] = idx[q - 1] + 1;
        }
    }
}

/// Index `i` sits at argsort position `p` (both 1-based): exactly `p − 1`
/// other indices beat it. Expanded over every choice of those indices.
pub fn encode_rankis(y: &[String], i: usize, p: usize) -> Formula {
    let others: Vec<usize> = (1..=y.len()).filter(|&j| j != i).collect();
    Formula::or(combinations(&others, p - 1).into_iter().map(|winners| {
        Formula::and(others.iter().map(|&j| {
            if winners.contains(&j) {
                beats(y, j, i)
            } else {
                not_beats(y, j, i)
            }
        }))
    }))
}

/// Negated top-k argsort equivalence:
/// `⋁_{p≤k} ⋁_{i≠i'} rankis(yA, i, p) ∧ rankis(yB, i', p)`.
///
/// The expansion is combinatorial in `m` (roughly `k·m²·C(m−1, p−1)` atoms);
/// keep `m ≤ 10`.
pub fn encode_topk_neq(ya: &[String], yb: &[String], k: usize) -> Result<Formula, RelationError> {
    same_len(ya, yb)?;
    let m = ya.len();
    if k == 0 || k > m {
        return Err(RelationError::KOutOfRange { k, m });
    }
    let mut disjuncts = Vec::new();
    for p in 1..=k {
        let ranks_b: Vec<Formula> = (1..=m).map(|i| encode_rankis(yb, i, p)).collect();
        for i in 1..=m {
            let others = Formula::or(
                (1..=m)
                    .filter(|&i2| i2 != i)
                    .map(|i2| ranks_b[i2 - 1].clone()),
            );
            disjuncts.push(Formula::and([encode_rankis(ya, i, p), others]));
        }
    }
    Ok(Formula::or(disjuncts))
}

/// Negated relation over the two output vectors.
pub fn encode_negated_relation(
    rel: &EquivalenceRelation,
    ya: &[String],
    yb: &[String],
    namer: &mut VariableNamer,
) -> Result<Formula, RelationError> {
    rel.check_for_outputs(ya.len())?;
    match rel {
        EquivalenceRelation::Strict => encode_strict_neq(ya, yb),
        EquivalenceRelation::L1(e) => encode_l1_geq(ya, yb, e, namer),
        EquivalenceRelation::LInf(e) => encode_linf_geq(ya, yb, e, namer),
        EquivalenceRelation::Argmax => encode_argmax_neq(ya, yb),
        EquivalenceRelation::TopK(k) => encode_topk_neq(ya, yb, *k),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("input dimensions differ: {a} vs {b}")]
    InputDim { a: usize, b: usize },
    #[error("output dimensions differ: {a} vs {b}")]
    OutputDim { a: usize, b: usize },
    #[error("grid domain has {actual} features, networks have {expected}")]
    GridDim { expected: usize, actual: usize },
    #[error(transparent)]
    Relation(#[from] RelationError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

/// Variable counts of a query: shared inputs, per-network internals
/// (affine, activation and auxiliary variables) and per-network outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct VarCounts {
    pub inputs: usize,
    pub internal: usize,
    pub outputs: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryMeta {
    pub relation: EquivalenceRelation,
    pub net_a: String,
    pub net_b: String,
    pub input_dim: usize,
    pub output_dim: usize,
    pub counts: VarCounts,
    /// Whether any input bound was asserted.
    pub bounds_asserted: bool,
    /// Whether inputs were restricted to a finite grid.
    pub grid_mode: bool,
    pub activation_encoding: ActivationEncoding,
    pub warnings: Vec<String>,
}

/// A complete satisfiability query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    /// Real-valued variables, in declaration order.
    pub declarations: Vec<String>,
    /// Conjuncts of the query, in assertion order.
    pub assertions: Vec<Formula>,
    pub meta: QueryMeta,
    /// Shared input variables.
    pub inputs: Vec<String>,
    pub outputs_a: Vec<String>,
    pub outputs_b: Vec<String>,
}

impl Query {
    /// The whole query as one conjunction.
    pub fn formula(&self) -> Formula {
        Formula::and(self.assertions.iter().cloned())
    }
}

#[derive(Debug, Clone, Default)]
pub struct QueryOptions {
    /// Restricts every input to a finite value list (test harnesses only).
    pub grid: Option<DiscreteDomain>,
    /// Extra conjuncts appended after the negated relation.
    pub extra: Vec<Formula>,
    pub activation_encoding: ActivationEncoding,
}

/// Feature-wise intersection of two bound lists, plus warnings about
/// mismatches.
pub fn intersect_bounds(a: &Network, b: &Network) -> (Vec<Option<Interval>>, Vec<String>) {
    let mut warnings = Vec::new();
    let bounds = (0..a.input_dim)
        .map(|j| match (a.bound(j), b.bound(j)) {
            (None, None) => None,
            (Some(x), None) | (None, Some(x)) => {
                warnings.push(format!("x{}: bounds declared by only one network", j + 1));
                Some(x.clone())
            }
            (Some(x), Some(y)) => {
                if x != y {
                    warnings.push(format!("x{}: bounds differ, using intersection", j + 1));
                }
                let lower = if x.lower >= y.lower { &x.lower } else { &y.lower };
                let upper = if x.upper <= y.upper { &x.upper } else { &y.upper };
                if lower > upper {
                    warnings.push(format!("x{}: bounds do not overlap, domain is empty", j + 1));
                }
                Some(Interval::new(lower.clone(), upper.clone()))
            }
        })
        .collect();
    (bounds, warnings)
}

/// Builds `bounds ∧ φ_A ∧ φ_B ∧ ¬relation` over shared inputs.
pub fn build_query(a: &Network, b: &Network, rel: &EquivalenceRelation) -> Result<Query, QueryError> {
    build_query_with(a, b, rel, &QueryOptions::default())
}

pub fn build_query_with(
    a: &Network,
    b: &Network,
    rel: &EquivalenceRelation,
    options: &QueryOptions,
) -> Result<Query, QueryError> {
    if a.input_dim != b.input_dim {
        return Err(QueryError::InputDim { a: a.input_dim, b: b.input_dim });
    }
    if a.output_dim() != b.output_dim() {
        return Err(QueryError::OutputDim { a: a.output_dim(), b: b.output_dim() });
    }
    let m = a.output_dim();
    rel.check_for_outputs(m)?;

    let inputs = VariableNamer::inputs(a.input_dim);
    let (bounds, warnings) = intersect_bounds(a, b);
    let bounds_f = encode_input_bounds(&bounds, &inputs);

    let mut assertions: Vec<Formula> = bounds_f.conjuncts().to_vec();
    let bounds_asserted = !assertions.is_empty();

    if let Some(grid) = &options.grid {
        if grid.dims() != a.input_dim {
            return Err(QueryError::GridDim { expected: a.input_dim, actual: grid.dims() });
        }
        for (x, values) in inputs.iter().zip(grid.features()) {
            assertions.push(Formula::or(
                values
                    .iter()
                    .map(|v| Formula::eq(var(x), Term::Const(v.clone()))),
            ));
        }
    }

    let mut namer_a = VariableNamer::new("a");
    let mut namer_b = VariableNamer::new("b");
    let mut namer_r = VariableNamer::new("r");
    let act = options.activation_encoding;
    let enc_a = encode_network_with(a, &mut namer_a, &inputs, act)?;
    let enc_b = encode_network_with(b, &mut namer_b, &inputs, act)?;
    let negated = encode_negated_relation(rel, &enc_a.outputs, &enc_b.outputs, &mut namer_r)?;

    assertions.extend_from_slice(enc_a.formula.conjuncts());
    assertions.extend_from_slice(enc_b.formula.conjuncts());
    assertions.push(negated);
    assertions.extend(options.extra.iter().cloned());

    let mut declarations: Vec<String> = inputs.clone();
    declarations.extend(enc_a.internal_vars().cloned());
    declarations.extend(enc_a.outputs.iter().cloned());
    declarations.extend(enc_b.internal_vars().cloned());
    declarations.extend(enc_b.outputs.iter().cloned());
    declarations.extend(namer_r.issued_aux().iter().cloned());

    let counts = VarCounts {
        inputs: inputs.len(),
        internal: enc_a.internal_vars().count()
            + enc_b.internal_vars().count()
            + namer_r.issued_aux().len(),
        outputs: enc_a.outputs.len() + enc_b.outputs.len(),
    };

    Ok(Query {
        declarations,
        assertions,
        meta: QueryMeta {
            relation: rel.clone(),
            net_a: a.name.to_string(),
            net_b: b.name.to_string(),
            input_dim: a.input_dim,
            output_dim: m,
            counts,
            bounds_asserted,
            grid_mode: options.grid.is_some(),
            activation_encoding: act,
            warnings,
        },
        inputs,
        outputs_a: enc_a.outputs,
        outputs_b: enc_b.outputs,
    })
}
