//! Linear real arithmetic terms and quantifier-free formulas over them.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::rational::Rational;

/// Variable name to value.
pub type Assignment = BTreeMap<String, Rational>;

/// A linear term. There is no variable-by-variable product.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Var(String),
    Const(Rational),
    Sum(Vec<Term>),
    Scale(Rational, Box<Term>),
    /// `if c then t else e`. Both branches must be linear.
    Ite(Box<Formula>, Box<Term>, Box<Term>),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn constant(v: Rational) -> Self {
        Term::Const(v)
    }

    /// `coef · t`, collapsing the trivial coefficients 0 and 1.
    pub fn scaled(coef: Rational, t: Term) -> Self {
        if coef.is_one() {
            t
        } else if coef.is_zero() {
            Term::Const(Rational::zero())
        } else {
            Term::Scale(coef, Box::new(t))
        }
    }

    pub fn ite(cond: Formula, then: Term, otherwise: Term) -> Self {
        Term::Ite(Box::new(cond), Box::new(then), Box::new(otherwise))
    }

    /// `t1 − t2`.
    pub fn minus(a: Term, b: Term) -> Self {
        Term::Sum(alloc::vec![a, Term::Scale(-Rational::one(), Box::new(b))])
    }

    /// `Σ coef_k · var_k + constant`, dropping zero coefficients and a zero
    /// constant. An all-zero expression becomes `Const(0)`.
    pub fn linear<'a, I>(terms: I, constant: &Rational) -> Self
    where
        I: IntoIterator<Item = (&'a Rational, &'a str)>,
    {
        let mut parts: Vec<Term> = terms
            .into_iter()
            .filter(|(c, _)| !c.is_zero())
            .map(|(c, v)| Term::scaled(c.clone(), Term::var(v)))
            .collect();
        if !constant.is_zero() {
            parts.push(Term::Const(constant.clone()));
        }
        match parts.len() {
            0 => Term::Const(Rational::zero()),
            1 => parts.pop().unwrap(),
            _ => Term::Sum(parts),
        }
    }

    pub fn eval(&self, env: &Assignment) -> Result<Rational, UnboundVariable> {
        Ok(match self {
            Term::Var(n) => env.get(n).cloned().ok_or_else(|| UnboundVariable(n.clone()))?,
            Term::Const(c) => c.clone(),
            Term::Sum(ts) => {
                let mut acc = Rational::zero();
                for t in ts {
                    acc += t.eval(env)?;
                }
                acc
            }
            Term::Scale(c, t) => c * t.eval(env)?,
            Term::Ite(c, t, e) => {
                if c.eval(env)? {
                    t.eval(env)?
                } else {
                    e.eval(env)?
                }
            }
        })
    }

    fn collect_vars<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Term::Var(n) => {
                out.insert(n);
            }
            Term::Const(_) => {}
            Term::Sum(ts) => ts.iter().for_each(|t| t.collect_vars(out)),
            Term::Scale(_, t) => t.collect_vars(out),
            Term::Ite(c, t, e) => {
                c.collect_vars(out);
                t.collect_vars(out);
                e.collect_vars(out);
            }
        }
    }

    /// Degree in the variables: 0 for constants, 1 for linear terms.
    /// The term grammar cannot express anything higher. A conditional
    /// counts as linear when its condition mentions a variable.
    pub fn degree(&self) -> u32 {
        match self {
            Term::Var(_) => 1,
            Term::Const(_) => 0,
            Term::Sum(ts) => ts.iter().map(Term::degree).max().unwrap_or(0),
            Term::Scale(_, t) => t.degree(),
            Term::Ite(c, t, e) => {
                let cond = u32::from(!c.variables().is_empty());
                cond.max(t.degree()).max(e.degree())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn holds(self, a: &Rational, b: &Rational) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }
}

/// Quantifier-free formula over linear comparisons.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    Cmp(Term, CmpOp, Term),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Not(Box<Formula>),
    True,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("variable `{0}` has no value")]
pub struct UnboundVariable(pub String);

impl Formula {
    pub fn cmp(a: Term, op: CmpOp, b: Term) -> Self {
        Formula::Cmp(a, op, b)
    }

    pub fn eq(a: Term, b: Term) -> Self {
        Formula::Cmp(a, CmpOp::Eq, b)
    }

    /// Conjunction, flattening nested `And`s and dropping `True`.
    pub fn and(parts: impl IntoIterator<Item = Formula>) -> Self {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::True => {}
                Formula::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::True,
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    /// Disjunction, flattening nested `Or`s. An empty disjunction is false.
    pub fn or(parts: impl IntoIterator<Item = Formula>) -> Self {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::Or(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        if out.len() == 1 {
            out.pop().unwrap()
        } else {
            Formula::Or(out)
        }
    }

    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    /// Top-level conjuncts (a non-`And` formula is its own single conjunct).
    pub fn conjuncts(&self) -> &[Formula] {
        match self {
            Formula::And(v) => v,
            Formula::True => &[],
            other => core::slice::from_ref(other),
        }
    }

    pub fn eval(&self, env: &Assignment) -> Result<bool, UnboundVariable> {
        Ok(match self {
            Formula::Cmp(a, op, b) => op.holds(&a.eval(env)?, &b.eval(env)?),
            Formula::And(fs) => {
                for f in fs {
                    if !f.eval(env)? {
                        return Ok(false);
                    }
                }
                true
            }
            Formula::Or(fs) => {
                for f in fs {
                    if f.eval(env)? {
                        return Ok(true);
                    }
                }
                false
            }
            Formula::Not(f) => !f.eval(env)?,
            Formula::True => true,
        })
    }

    /// Names of all variables mentioned, sorted.
    pub fn variables(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Formula::Cmp(a, _, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_vars(out)),
            Formula::Not(f) => f.collect_vars(out),
            Formula::True => {}
        }
    }

    /// Visits every comparison atom.
    pub fn for_each_atom<'a>(&'a self, visit: &mut impl FnMut(&'a Term, CmpOp, &'a Term)) {
        match self {
            Formula::Cmp(a, op, b) => visit(a, *op, b),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.for_each_atom(visit)),
            Formula::Not(f) => f.for_each_atom(visit),
            Formula::True => {}
        }
    }

    /// Number of `Or` nodes in the tree.
    pub fn disjunction_count(&self) -> usize {
        match self {
            Formula::Cmp(..) | Formula::True => 0,
            Formula::And(fs) => fs.iter().map(Formula::disjunction_count).sum(),
            Formula::Or(fs) => 1 + fs.iter().map(Formula::disjunction_count).sum::<usize>(),
            Formula::Not(f) => f.disjunction_count(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;
    use alloc::vec;

    fn env(pairs: &[(&str, i64)]) -> Assignment {
        pairs.iter().map(|(k, v)| (String::from(*k), int(*v))).collect()
    }

    #[test]
    fn linear_collapses_trivial_coefficients() {
        let one = int(1);
        let zero = int(0);
        let t = Term::linear([(&one, "x1"), (&zero, "x2")], &zero);
        assert_eq!(t, Term::var("x1"));
        assert_eq!(Term::linear([(&zero, "x1")], &zero), Term::Const(int(0)));
    }

    #[test]
    fn evaluates_under_assignment() {
        let two = int(2);
        let f = Formula::and([
            Formula::eq(Term::var("y"), Term::linear([(&two, "x")], &int(1))),
            Formula::or([
                Formula::cmp(Term::var("x"), CmpOp::Gt, Term::Const(int(0))),
                Formula::not(Formula::eq(Term::var("y"), Term::var("y"))),
            ]),
        ]);
        assert!(f.eval(&env(&[("x", 3), ("y", 7)])).unwrap());
        assert!(!f.eval(&env(&[("x", 3), ("y", 8)])).unwrap());
        assert_eq!(
            f.eval(&env(&[("x", 3)])),
            Err(UnboundVariable(String::from("y")))
        );
    }

    #[test]
    fn constructors_flatten() {
        let a = Formula::eq(Term::var("a"), Term::var("b"));
        let f = Formula::and([Formula::True, Formula::and([a.clone(), a.clone()]), a.clone()]);
        assert_eq!(f.conjuncts().len(), 3);
        assert_eq!(Formula::and([]), Formula::True);
        assert!(!Formula::or([]).eval(&Assignment::new()).unwrap());
        assert_eq!(Formula::or([a.clone()]), a);
        assert_eq!(f.variables().into_iter().collect::<Vec<_>>(), vec!["a", "b"]);
    }
}
