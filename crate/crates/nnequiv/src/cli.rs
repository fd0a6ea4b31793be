//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nnequiv_core::encoder::ActivationEncoding;
use nnequiv_core::equivalence::QueryOptions;
use nnequiv_core::oracle::{exhaustive_check, DiscreteDomain, OracleVerdict, DEFAULT_BUDGET};
use nnequiv_core::perturbation::{perturb, Change, PerturbationSpec, Sampling};
use nnequiv_core::rational::{parse_decimal, to_approx_string, to_exact_string};
use nnequiv_core::smtlib::serialize_smtlib;
use nnequiv_core::{
    build_query_with, certify, forward, CertifyError, EquivalenceRelation, Network, Query, Rational,
};
use serde_json::json;

use crate::format::{network_to_json, parse_vector, read_network};
use crate::report::{
    numbers, Certification, CheckReport, CounterexampleInfo, NetworkInfo, Networks, RejectionInfo, RelationInfo,
    Variables, REPORT_VERSION,
};
use crate::solver::{default_args, parse_template, run_text, solver_identity, Outcome, SolverConfig, SOLVER_ENV};

pub const EXIT_EQUIVALENT: i32 = 0;
pub const EXIT_VIOLATED: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_USAGE: i32 = 3;
pub const EXIT_UNSOUND: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "nnequiv", version, about = "Equivalence checking of feedforward ReLU networks via SMT")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide whether two networks are equivalent under a relation.
    Check(CheckArgs),
    /// Write the SMT-LIB query without solving it.
    Encode(EncodeArgs),
    /// Evaluate a network exactly on one input.
    Eval(EvalArgs),
    /// Decide equivalence by enumerating a finite input grid.
    Oracle(OracleArgs),
    /// Write a copy of a network with a few parameters changed.
    Perturb(PerturbArgs),
    /// Print parameter counts.
    Params(ParamsArgs),
    /// Report structural problems in model files.
    Validate(ParamsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RelationTag {
    Strict,
    L1,
    Linf,
    Argmax,
    Topk,
}

#[derive(Debug, Args)]
pub struct RelationArgs {
    #[arg(long, value_enum)]
    pub relation: RelationTag,
    /// Exact decimal; defaults to 5 for l1 and 10 for linf.
    #[arg(long)]
    pub epsilon: Option<String>,
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PairArgs {
    pub model_a: PathBuf,
    pub model_b: PathBuf,
    #[command(flatten)]
    pub relation: RelationArgs,
    /// Restrict inputs to a finite grid ({0,1} per feature unless --grid is given).
    #[arg(long)]
    pub grid_mode: bool,
    /// Grid used by --grid-mode, as lo:hi:step.
    #[arg(long, requires = "grid_mode")]
    pub grid: Option<String>,
    /// How ReLU and hard tanh are written: guarded disjunctions, or `ite`
    /// definitions that a solver can substitute away.
    #[arg(long, value_enum, default_value_t = Encoding::Disjunctive)]
    pub activation_encoding: Encoding,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Encoding {
    Disjunctive,
    Ite,
}

impl From<Encoding> for ActivationEncoding {
    fn from(e: Encoding) -> Self {
        match e {
            Encoding::Disjunctive => ActivationEncoding::Disjunctive,
            Encoding::Ite => ActivationEncoding::Ite,
        }
    }
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    /// Solver executable (default: $NNEQUIV_SOLVER, else z3).
    #[arg(long, env = SOLVER_ENV, default_value = "z3")]
    pub solver: String,
    /// Solver arguments, split with shell quoting; `{file}` is replaced by the
    /// query path, and without it the query goes to standard input. Default:
    /// "-smt2 {file}", plus a substitution tactic for z3 on `ite` queries.
    #[arg(long, allow_hyphen_values = true)]
    pub solver_args: Option<String>,
    /// Seconds before the solver is killed.
    #[arg(long, default_value = "600")]
    pub timeout: f64,
    /// Address-space limit for the solver, in MiB.
    #[arg(long)]
    pub mem_limit: Option<u64>,
    /// Keep the emitted query at this path.
    #[arg(long)]
    pub keep_query: Option<PathBuf>,
    /// Write the JSON report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Print the JSON report to stdout instead of a summary.
    #[arg(long)]
    pub json: bool,
    /// Skip the in-process model check on Sat answers.
    #[arg(long, hide = true)]
    pub no_model_check: bool,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    /// Output path; stdout when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub model: PathBuf,
    /// Comma-separated exact decimals.
    #[arg(allow_hyphen_values = true)]
    pub input: String,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    pub model_a: PathBuf,
    pub model_b: PathBuf,
    #[command(flatten)]
    pub relation: RelationArgs,
    /// Enumerate {0,1} per feature (the default).
    #[arg(long, conflicts_with = "grid")]
    pub bits: bool,
    /// Enumerate lo:hi:step per feature.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: u128,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    pub model: PathBuf,
    #[arg(long)]
    pub count: usize,
    #[arg(long)]
    pub seed: u64,
    /// Magnitude range lo:hi (default 1e-6:1e-1).
    #[arg(long)]
    pub range: Option<String>,
    #[arg(long)]
    pub weights_only: bool,
    #[arg(long)]
    pub log_uniform: bool,
    /// Perturbed model path (default: <model>_pert.json).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Changelog path (default: <output stem>.changes.json).
    #[arg(long)]
    pub changelog: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ParamsArgs {
    #[arg(required = true)]
    pub models: Vec<PathBuf>,
}

/// A failure that ends the command with a given exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

type Res<T> = Result<T, Failure>;

fn load(path: &Path) -> Res<Network> {
    read_network(path).map_err(|e| usage(e.to_string()))
}

fn decimal(text: &str, what: &str) -> Res<Rational> {
    parse_decimal(text).map_err(|e| usage(format!("{what}: {e}")))
}

pub fn relation_from_args(r: &RelationArgs) -> Res<EquivalenceRelation> {
    let eps = r.epsilon.as_deref().map(|e| decimal(e, "--epsilon")).transpose()?;
    if eps.is_some() && !matches!(r.relation, RelationTag::L1 | RelationTag::Linf) {
        return Err(usage("--epsilon applies only to --relation l1 or linf"));
    }
    if r.k.is_some() && r.relation != RelationTag::Topk {
        return Err(usage("--k applies only to --relation topk"));
    }
    Ok(match r.relation {
        RelationTag::Strict => EquivalenceRelation::Strict,
        RelationTag::L1 => EquivalenceRelation::L1(eps.unwrap_or_else(EquivalenceRelation::default_l1_epsilon)),
        RelationTag::Linf => {
            EquivalenceRelation::LInf(eps.unwrap_or_else(EquivalenceRelation::default_linf_epsilon))
        }
        RelationTag::Argmax => EquivalenceRelation::Argmax,
        RelationTag::Topk => EquivalenceRelation::TopK(r.k.ok_or_else(|| usage("--relation topk requires --k"))?),
    })
}

fn parse_grid(text: &str, n: usize) -> Res<DiscreteDomain> {
    let parts: Vec<&str> = text.split(':').collect();
    let [lo, hi, step] = parts[..] else {
        return Err(usage("--grid expects lo:hi:step"));
    };
    DiscreteDomain::uniform_grid(n, &decimal(lo, "--grid")?, &decimal(hi, "--grid")?, &decimal(step, "--grid")?)
        .map_err(|e| usage(format!("--grid: {e}")))
}

struct Prepared {
    a: Network,
    b: Network,
    rel: EquivalenceRelation,
    query: Query,
}

fn prepare(p: &PairArgs) -> Res<Prepared> {
    let a = load(&p.model_a)?;
    let b = load(&p.model_b)?;
    let rel = relation_from_args(&p.relation)?;
    let grid = if p.grid_mode {
        Some(match &p.grid {
            Some(g) => parse_grid(g, a.input_dim)?,
            None => DiscreteDomain::bits(a.input_dim),
        })
    } else {
        None
    };
    let options = QueryOptions {
        grid,
        activation_encoding: p.activation_encoding.into(),
        ..QueryOptions::default()
    };
    let query = build_query_with(&a, &b, &rel, &options).map_err(|e| usage(e.to_string()))?;
    Ok(Prepared { a, b, rel, query })
}

fn write_file(path: &Path, text: &str) -> Res<()> {
    std::fs::write(path, text).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

fn cmd_encode(args: &EncodeArgs, out: &mut dyn Write) -> Res<i32> {
    let p = prepare(&args.pair)?;
    let text = serialize_smtlib(&p.query);
    match &args.output {
        Some(path) => write_file(path, &text)?,
        None => {
            let _ = out.write_all(text.as_bytes());
        }
    }
    Ok(EXIT_EQUIVALENT)
}

/// Runs the check pipeline and returns the report; `exit_code` is filled in.
pub fn run_check(args: &CheckArgs) -> Res<CheckReport> {
    if !(args.timeout > 0.0 && args.timeout.is_finite()) {
        return Err(usage("--timeout must be a positive number of seconds"));
    }
    let p = prepare(&args.pair)?;
    let template = match &args.solver_args {
        Some(t) => t.as_str(),
        None => default_args(&args.solver, p.query.meta.activation_encoding),
    };
    let solver_args =
        parse_template(template).ok_or_else(|| usage(format!("--solver-args: unbalanced quotes in `{template}`")))?;
    let cfg = SolverConfig {
        program: args.solver.clone(),
        args: solver_args,
        timeout: Duration::from_secs_f64(args.timeout),
        mem_limit_mib: args.mem_limit,
        keep_query: args.keep_query.clone(),
        check_model: !args.no_model_check,
    };
    let text = serialize_smtlib(&p.query);
    let verdict = run_text(&p.query, &text, &cfg);

    let mut warnings = p.query.meta.warnings.clone();
    warnings.extend(verdict.warnings.iter().cloned());
    let mut certification = Certification::NotApplicable;
    let mut counterexample = None;
    let mut rejection = None;
    let mut detail = None;
    let exit_code = match &verdict.outcome {
        Outcome::Unsat => EXIT_EQUIVALENT,
        Outcome::Sat(model) => match certify(&p.a, &p.b, &p.rel, model) {
            Ok(cex) => {
                if !cex.bounds_respected {
                    warnings.push("counterexample lies outside the declared input bounds".to_owned());
                }
                certification = Certification::Certified;
                counterexample = Some(CounterexampleInfo::of(&cex));
                EXIT_VIOLATED
            }
            Err(e) => {
                certification = Certification::Rejected;
                let (input, outputs_a, outputs_b) = match &e {
                    CertifyError::Rejected {
                        input,
                        outputs_a,
                        outputs_b,
                        ..
                    } => (numbers(input), numbers(outputs_a), numbers(outputs_b)),
                    _ => (Vec::new(), Vec::new(), Vec::new()),
                };
                rejection = Some(RejectionInfo {
                    reason: e.to_string(),
                    input,
                    outputs_a,
                    outputs_b,
                });
                EXIT_UNSOUND
            }
        },
        Outcome::SolverError(d) => {
            detail = Some(d.clone());
            EXIT_INCONCLUSIVE
        }
        Outcome::Timeout | Outcome::MemOut | Outcome::Unknown => EXIT_INCONCLUSIVE,
    };
    let counts = p.query.meta.counts;
    Ok(CheckReport {
        report_version: REPORT_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        relation: RelationInfo::of(&p.rel),
        networks: Networks {
            a: NetworkInfo::of(&p.a, &args.pair.model_a.display().to_string()),
            b: NetworkInfo::of(&p.b, &args.pair.model_b.display().to_string()),
        },
        variables: Variables {
            input: counts.inputs,
            internal: counts.internal,
            output: counts.outputs,
        },
        bounds_asserted: p.query.meta.bounds_asserted,
        grid_mode: p.query.meta.grid_mode,
        activation_encoding: p.query.meta.activation_encoding.tag().to_owned(),
        verdict: verdict.outcome.tag().to_owned(),
        verdict_detail: detail,
        wall_clock_seconds: verdict.elapsed.as_secs_f64(),
        timeout_seconds: args.timeout,
        mem_limit_mib: verdict.mem_limit_mib,
        solver: solver_identity(&cfg.program),
        solver_args: cfg.args.clone(),
        query_file: verdict.query_file.map(|p| p.display().to_string()),
        certification,
        counterexample,
        rejection,
        warnings,
        exit_code,
    })
}

fn summary(r: &CheckReport) -> String {
    let mut s = format!(
        "{} vs {} under {}: {}",
        r.networks.a.name,
        r.networks.b.name,
        describe_relation(&r.relation),
        r.verdict
    );
    match r.verdict.as_str() {
        "unsat" => s.push_str(" (equivalent)"),
        "sat" if r.certification == Certification::Certified => s.push_str(" (not equivalent, certified)"),
        "sat" => s.push_str(" (CERTIFICATION REJECTED)"),
        _ => s.push_str(" (inconclusive)"),
    }
    s.push_str(&format!(" in {:.3}s\n", r.wall_clock_seconds));
    if let Some(d) = &r.verdict_detail {
        s.push_str(&format!("  detail: {d}\n"));
    }
    if let Some(c) = &r.counterexample {
        s.push_str(&format!("  input:     {}\n", render(&c.input)));
        s.push_str(&format!("  outputs A: {}\n", render(&c.outputs_a)));
        s.push_str(&format!("  outputs B: {}\n", render(&c.outputs_b)));
        s.push_str(&format!("  witness:   {}\n", c.witness.description));
    }
    if let Some(rj) = &r.rejection {
        s.push_str(&format!("  rejected: {}\n", rj.reason));
    }
    for w in &r.warnings {
        s.push_str(&format!("  warning: {w}\n"));
    }
    s
}

fn describe_relation(r: &RelationInfo) -> String {
    match (&r.epsilon, r.k) {
        (Some(e), _) => format!("{} (epsilon {e})", r.tag),
        (_, Some(k)) => format!("{} (k {k})", r.tag),
        _ => r.tag.clone(),
    }
}

fn render(v: &[crate::report::Number]) -> String {
    let parts: Vec<String> = v
        .iter()
        .map(|n| {
            if n.exact == n.approx.trim_end_matches('0').trim_end_matches('.') {
                n.exact.clone()
            } else {
                format!("{} (~{})", n.exact, n.approx)
            }
        })
        .collect();
    format!("({})", parts.join(", "))
}

fn cmd_check(args: &CheckArgs, out: &mut dyn Write) -> Res<i32> {
    let report = run_check(args)?;
    let json = report.to_json();
    if let Some(path) = &args.report {
        write_file(path, &json)?;
    }
    if args.json {
        let _ = out.write_all(json.as_bytes());
    } else {
        let _ = out.write_all(summary(&report).as_bytes());
    }
    Ok(report.exit_code)
}

fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> Res<i32> {
    let net = load(&args.model)?;
    let x = parse_vector(&args.input).map_err(|e| usage(format!("input: {e}")))?;
    let y = forward(&net, &x).map_err(|e| usage(e.to_string()))?;
    let exact: Vec<String> = y.iter().map(to_exact_string).collect();
    let _ = writeln!(out, "({})", exact.join(", "));
    for (i, v) in y.iter().enumerate() {
        let _ = writeln!(out, "y{} = {} ~ {}", i + 1, to_exact_string(v), to_approx_string(v, 9));
    }
    Ok(EXIT_EQUIVALENT)
}

fn cmd_oracle(args: &OracleArgs, out: &mut dyn Write) -> Res<i32> {
    let a = load(&args.model_a)?;
    let b = load(&args.model_b)?;
    let rel = relation_from_args(&args.relation)?;
    rel.check_for_outputs(a.output_dim()).map_err(|e| usage(e.to_string()))?;
    let domain = match &args.grid {
        Some(g) => parse_grid(g, a.input_dim)?,
        None => DiscreteDomain::bits(a.input_dim),
    };
    match exhaustive_check(&a, &b, &rel, &domain, args.budget).map_err(|e| usage(e.to_string()))? {
        OracleVerdict::Equivalent { points } => {
            let _ = writeln!(out, "equivalent on all {points} grid points");
            Ok(EXIT_EQUIVALENT)
        }
        OracleVerdict::Violated {
            input,
            outputs_a,
            outputs_b,
            witness,
            index,
        } => {
            let show = |v: &[Rational]| v.iter().map(to_exact_string).collect::<Vec<_>>().join(", ");
            let _ = writeln!(out, "violated at point #{index}: ({})", show(&input));
            let _ = writeln!(out, "  outputs A: ({})", show(&outputs_a));
            let _ = writeln!(out, "  outputs B: ({})", show(&outputs_b));
            let _ = writeln!(out, "  witness:   {witness}");
            Ok(EXIT_VIOLATED)
        }
    }
}

fn change_json(c: &Change) -> serde_json::Value {
    json!({
        "layer": c.position.layer + 1,
        "kind": c.position.kind.name(),
        "row": c.position.row + 1,
        "col": c.position.col + 1,
        "old": to_exact_string(&c.old),
        "new": to_exact_string(&c.new),
        "delta": to_exact_string(&(&c.new - &c.old)),
    })
}

fn cmd_perturb(args: &PerturbArgs, out: &mut dyn Write) -> Res<i32> {
    let net = load(&args.model)?;
    let mut spec = PerturbationSpec::new(args.count, args.seed);
    if let Some(r) = &args.range {
        let Some((lo, hi)) = r.split_once(':') else {
            return Err(usage("--range expects lo:hi"));
        };
        spec = spec.with_range(decimal(lo, "--range")?, decimal(hi, "--range")?);
    }
    spec.weights_only = args.weights_only;
    if args.log_uniform {
        spec.sampling = Sampling::LogUniform;
    }
    let (mut pert, changes) = perturb(&net, &spec).map_err(|e| usage(e.to_string()))?;
    pert.name = format!("{}_pert", net.name);

    let output = args.output.clone().unwrap_or_else(|| sibling(&args.model, "_pert.json"));
    let changelog = args.changelog.clone().unwrap_or_else(|| sibling(&output, ".changes.json"));
    write_file(&output, &network_to_json(&pert))?;
    let log = json!({
        "source": args.model.display().to_string(),
        "seed": args.seed,
        "count": args.count,
        "range": [to_exact_string(&spec.lo), to_exact_string(&spec.hi)],
        "weights_only": spec.weights_only,
        "sampling": if args.log_uniform { "log_uniform" } else { "uniform" },
        "index_base": 1,
        "changes": changes.iter().map(change_json).collect::<Vec<_>>(),
    });
    let mut text = serde_json::to_string_pretty(&log).expect("changelog serializes");
    text.push('\n');
    write_file(&changelog, &text)?;
    let _ = writeln!(
        out,
        "changed {} parameter(s); wrote {} and {}",
        changes.len(),
        output.display(),
        changelog.display()
    );
    Ok(EXIT_EQUIVALENT)
}

/// `dir/stem<suffix>` next to `path`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn cmd_params(args: &ParamsArgs, out: &mut dyn Write) -> Res<i32> {
    let nets = args.models.iter().map(|p| load(p)).collect::<Res<Vec<_>>>()?;
    for (path, net) in args.models.iter().zip(&nets) {
        if nets.len() == 1 {
            let _ = writeln!(out, "{}", net.param_count());
        } else {
            let _ = writeln!(out, "{}: {}", path.display(), net.param_count());
        }
    }
    Ok(EXIT_EQUIVALENT)
}

fn cmd_validate(args: &ParamsArgs, out: &mut dyn Write) -> Res<i32> {
    let mut code = EXIT_EQUIVALENT;
    for path in &args.models {
        match read_network(path) {
            Ok(net) => {
                let _ = writeln!(out, "{}: ok ({} parameters)", path.display(), net.param_count());
            }
            Err(e) => {
                let _ = writeln!(out, "{e}");
                code = EXIT_USAGE;
            }
        }
    }
    Ok(code)
}

/// Parses `argv` and runs the command, writing normal output to `out` and
/// diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Check(a) => cmd_check(a, out),
        Command::Encode(a) => cmd_encode(a, out),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Oracle(a) => cmd_oracle(a, out),
        Command::Perturb(a) => cmd_perturb(a, out),
        Command::Params(a) => cmd_params(a, out),
        Command::Validate(a) => cmd_validate(a, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}
