//! SMT-LIB 2 text: query emission and parsing of solver responses.
//!
//! Emission is a pure function of the [`Query`], so identical queries always
//! produce byte-identical text.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::encoder::ActivationEncoding;
use crate::equivalence::Query;
use crate::formula::{Assignment, CmpOp, Formula, Term};
use crate::rational::{parse_decimal, to_exact_decimal, to_exact_string, Rational};

/// Writes a rational as an SMT-LIB real literal: `3`, `0.25`, `(/ 1 3)`,
/// with negatives as `(- …)`.
pub fn write_rational(out: &mut String, r: &Rational) {
    let mag = r.abs();
    let body = match to_exact_decimal(&mag) {
        Some(d) => d,
        None => format!("(/ {} {})", mag.numer(), mag.denom()),
    };
    if r.is_negative() {
        out.push_str("(- ");
        out.push_str(&body);
        out.push(')');
    } else {
        out.push_str(&body);
    }
}

pub fn rational_literal(r: &Rational) -> String {
    let mut s = String::new();
    write_rational(&mut s, r);
    s
}

fn write_term(out: &mut String, t: &Term) {
    match t {
        Term::Var(n) => out.push_str(n),
        Term::Const(c) => write_rational(out, c),
        Term::Sum(ts) => match ts.len() {
            0 => out.push('0'),
            1 => write_term(out, &ts[0]),
            _ => {
                out.push_str("(+");
                for t in ts {
                    out.push(' ');
                    write_term(out, t);
                }
                out.push(')');
            }
        },
        Term::Scale(c, t) => {
            out.push_str("(* ");
            write_rational(out, c);
            out.push(' ');
            write_term(out, t);
            out.push(')');
        }
        Term::Ite(c, t, e) => {
            out.push_str("(ite ");
            write_formula(out, c);
            out.push(' ');
            write_term(out, t);
            out.push(' ');
            write_term(out, e);
            out.push(')');
        }
    }
}

fn op_symbol(op: CmpOp) -> &'static str {
    match op {
        CmpOp::Eq | CmpOp::Ne => "=",
        CmpOp::Lt => "<",
        CmpOp::Le => "<=",
        CmpOp::Gt => ">",
        CmpOp::Ge => ">=",
    }
}

/// Writes a formula; `≠` becomes a negated equality.
pub fn write_formula(out: &mut String, f: &Formula) {
    match f {
        Formula::Cmp(a, op, b) => {
            if *op == CmpOp::Ne {
                out.push_str("(not ");
            }
            out.push('(');
            out.push_str(op_symbol(*op));
            out.push(' ');
            write_term(out, a);
            out.push(' ');
            write_term(out, b);
            out.push(')');
            if *op == CmpOp::Ne {
                out.push(')');
            }
        }
        Formula::And(fs) | Formula::Or(fs) => {
            let (name, empty) = match f {
                Formula::And(_) => ("and", "true"),
                _ => ("or", "false"),
            };
            match fs.len() {
                0 => out.push_str(empty),
                1 => write_formula(out, &fs[0]),
                _ => {
                    out.push('(');
                    out.push_str(name);
                    for g in fs {
                        out.push(' ');
                        write_formula(out, g);
                    }
                    out.push(')');
                }
            }
        }
        Formula::Not(g) => {
            out.push_str("(not ");
            write_formula(out, g);
            out.push(')');
        }
        Formula::True => out.push_str("true"),
    }
}

pub fn formula_to_string(f: &Formula) -> String {
    let mut s = String::new();
    write_formula(&mut s, f);
    s
}

fn header_value(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_whitespace() { '_' } else { c })
        .collect()
}

/// Renders a query as a QF_LRA script ending in `(check-sat)` and `(get-model)`.
pub fn serialize_smtlib(q: &Query) -> String {
    let meta = &q.meta;
    let mut out = String::with_capacity(64 * (q.declarations.len() + q.assertions.len()));
    let eps = meta
        .relation
        .epsilon()
        .map_or_else(|| "none".to_string(), to_exact_string);
    let k = meta
        .relation
        .k()
        .map_or_else(|| "none".to_string(), |k| k.to_string());
    let _ = writeln!(
        out,
        "; nnequiv relation={} netA={} netB={} epsilon={} k={}",
        meta.relation.tag(),
        header_value(&meta.net_a),
        header_value(&meta.net_b),
        eps,
        k
    );
    let _ = writeln!(
        out,
        "; inputs={} outputs={} variables: input={} internal={} output={}",
        meta.input_dim, meta.output_dim, meta.counts.inputs, meta.counts.internal, meta.counts.outputs
    );
    let _ = writeln!(
        out,
        "; input bounds asserted: {}; grid mode: {}",
        if meta.bounds_asserted { "yes" } else { "no (all features unbounded)" },
        if meta.grid_mode { "yes" } else { "no" }
    );
    if meta.activation_encoding != ActivationEncoding::Disjunctive {
        let _ = writeln!(out, "; activation encoding: {}", meta.activation_encoding.tag());
    }
    for w in &meta.warnings {
        let _ = writeln!(out, "; warning: {}", w.replace('\n', " "));
    }
    out.push_str("(set-logic QF_LRA)\n");
    for d in &q.declarations {
        let _ = writeln!(out, "(declare-fun {d} () Real)");
    }
    for a in &q.assertions {
        out.push_str("(assert ");
        write_formula(&mut out, a);
        out.push_str(")\n");
    }
    out.push_str("(check-sat)\n(get-model)\n");
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmtParseError {
    #[error("unbalanced parentheses")]
    Unbalanced,
    #[error("unterminated {0}")]
    Unterminated(&'static str),
    #[error("malformed model: {0}")]
    Malformed(String),
    #[error("cannot read `{0}` as a real value")]
    BadValue(String),
    #[error("solver produced no check-sat answer")]
    NoAnswer,
}

/// Parsed s-expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SExpr {
    Atom(String),
    List(Vec<SExpr>),
}

impl SExpr {
    fn atom(&self) -> Option<&str> {
        match self {
            SExpr::Atom(a) => Some(a),
            SExpr::List(_) => None,
        }
    }
}

/// Tokenises and parses every top-level s-expression in `text`.
pub fn parse_sexprs(text: &str) -> Result<Vec<SExpr>, SmtParseError> {
    let mut stack: Vec<Vec<SExpr>> = alloc::vec![Vec::new()];
    let mut chars = text.char_indices().peekable();
    while let Some((start, c)) = chars.next() {
        match c {
            '(' => stack.push(Vec::new()),
            ')' => {
                let done = stack.pop().ok_or(SmtParseError::Unbalanced)?;
                stack
                    .last_mut()
                    .ok_or(SmtParseError::Unbalanced)?
                    .push(SExpr::List(done));
            }
            ';' => {
                for (_, c) in chars.by_ref() {
                    if c == '\n' {
                        break;
                    }
                }
            }
            c if c.is_whitespace() => {}
            '|' | '"' => {
                let mut end = None;
                for (i, d) in chars.by_ref() {
                    if d == c {
                        end = Some(i);
                        break;
                    }
                }
                let end = end.ok_or(SmtParseError::Unterminated(if c == '|' {
                    "quoted symbol"
                } else {
                    "string literal"
                }))?;
                let body = &text[start + 1..end];
                let atom = if c == '|' { body.to_string() } else { format!("\"{body}\"") };
                stack.last_mut().unwrap().push(SExpr::Atom(atom));
            }
            _ => {
                let mut end = text.len();
                while let Some(&(i, d)) = chars.peek() {
                    if d.is_whitespace() || d == '(' || d == ')' || d == ';' {
                        end = i;
                        break;
                    }
                    chars.next();
                }
                stack
                    .last_mut()
                    .unwrap()
                    .push(SExpr::Atom(text[start..end].to_string()));
            }
        }
        if stack.is_empty() {
            return Err(SmtParseError::Unbalanced);
        }
    }
    if stack.len() != 1 {
        return Err(SmtParseError::Unbalanced);
    }
    Ok(stack.pop().unwrap())
}

/// Reads a real-valued model term: numerals, decimals, `(- v)`, `(/ a b)`
/// and their nestings.
pub fn parse_real_value(e: &SExpr) -> Result<Rational, SmtParseError> {
    let render = || sexpr_to_string(e);
    match e {
        SExpr::Atom(a) => {
            let unsigned = a.bytes().all(|b| b.is_ascii_digit() || b == b'.');
            if !unsigned {
                return Err(SmtParseError::BadValue(render()));
            }
            parse_decimal(a).map_err(|_| SmtParseError::BadValue(render()))
        }
        SExpr::List(items) => match items.first().and_then(SExpr::atom) {
            Some("-") if items.len() == 2 => Ok(-parse_real_value(&items[1])?),
            Some("-") if items.len() > 2 => {
                let mut acc = parse_real_value(&items[1])?;
                for x in &items[2..] {
                    acc -= parse_real_value(x)?;
                }
                Ok(acc)
            }
            Some("/") if items.len() == 3 => {
                let n = parse_real_value(&items[1])?;
                let d = parse_real_value(&items[2])?;
                if d.is_zero() {
                    return Err(SmtParseError::BadValue(render()));
                }
                Ok(n / d)
            }
            Some("+") if items.len() >= 2 => items[1..]
                .iter()
                .try_fold(Rational::zero(), |acc, x| Ok(acc + parse_real_value(x)?)),
            Some("*") if items.len() >= 2 => items[1..].iter().try_fold(
                Rational::from_integer(BigInt::from(1)),
                |acc, x| Ok(acc * parse_real_value(x)?),
            ),
            Some("to_real") if items.len() == 2 => parse_real_value(&items[1]),
            _ => Err(SmtParseError::BadValue(render())),
        },
    }
}

fn sexpr_to_string(e: &SExpr) -> String {
    match e {
        SExpr::Atom(a) => a.clone(),
        SExpr::List(items) => {
            let inner: Vec<String> = items.iter().map(sexpr_to_string).collect();
            format!("({})", inner.join(" "))
        }
    }
}

/// Result of reading a `get-model` response.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParsedModel {
    pub values: Assignment,
    /// Entries that were skipped (non-real sorts, functions with arguments).
    pub warnings: Vec<String>,
}

fn collect_definitions(e: &SExpr, out: &mut ParsedModel) -> Result<(), SmtParseError> {
    let SExpr::List(items) = e else {
        // Bare `model` keyword in older output formats.
        return Ok(());
    };
    match items.first().and_then(SExpr::atom) {
        Some("define-fun") => {
            if items.len() != 5 {
                return Err(SmtParseError::Malformed(sexpr_to_string(e)));
            }
            let name = items[1]
                .atom()
                .ok_or_else(|| SmtParseError::Malformed(sexpr_to_string(e)))?;
            let no_args = matches!(&items[2], SExpr::List(a) if a.is_empty());
            let sort = items[3].atom();
            if !no_args || sort != Some("Real") {
                out.warnings
                    .push(format!("ignoring non-real definition of `{name}`"));
                return Ok(());
            }
            let value = parse_real_value(&items[4])?;
            out.values.insert(name.to_string(), value);
            Ok(())
        }
        Some("model") => items[1..].iter().try_for_each(|i| collect_definitions(i, out)),
        Some(other) if !matches!(items.first(), Some(SExpr::List(_))) => {
            out.warnings.push(format!("ignoring model entry `{other}`"));
            Ok(())
        }
        _ => items.iter().try_for_each(|i| collect_definitions(i, out)),
    }
}

/// Parses a `get-model` response into exact values.
pub fn parse_model(text: &str) -> Result<ParsedModel, SmtParseError> {
    let mut out = ParsedModel::default();
    for e in parse_sexprs(text)? {
        collect_definitions(&e, &mut out)?;
    }
    Ok(out)
}

/// Answer to `(check-sat)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckSat {
    Sat,
    Unsat,
    Unknown,
}

/// Finds the `check-sat` answer in solver output and returns it with the
/// remaining text (the model, if any). Leading `success` echoes and
/// error lines before the answer are skipped.
pub fn split_response(stdout: &str) -> Result<(CheckSat, &str), SmtParseError> {
    let mut offset = 0;
    for line in stdout.split_inclusive('\n') {
        let word = line.trim();
        offset += line.len();
        let answer = match word {
            "sat" => CheckSat::Sat,
            "unsat" => CheckSat::Unsat,
            "unknown" => CheckSat::Unknown,
            _ => continue,
        };
        return Ok((answer, &stdout[offset..]));
    }
    Err(SmtParseError::NoAnswer)
}
