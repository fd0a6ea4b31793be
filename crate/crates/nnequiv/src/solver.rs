//! Runs an external SMT-LIB 2 solver on a query.
//!
//! The solver runs in its own process group so that a timeout can kill it
//! together with anything it spawned.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::os::unix::process::{CommandExt, ExitStatusExt};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, ExitStatus, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use nnequiv_core::smtlib::{parse_model, serialize_smtlib, split_response, CheckSat};
use nnequiv_core::encoder::ActivationEncoding;
use nnequiv_core::{Assignment, Query};

/// Environment variable naming the default solver executable.
pub const SOLVER_ENV: &str = "NNEQUIV_SOLVER";
pub const DEFAULT_SOLVER: &str = "z3";
pub const DEFAULT_ARGS: &str = "-smt2 {file}";
/// z3 arguments for `ite` queries: eliminate defined variables before search.
pub const Z3_SUBSTITUTION_ARGS: &str =
    "-smt2 'tactic.default_tactic=(then simplify propagate-values solve-eqs simplify smt)' {file}";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(600);

/// Diagnostics that mark a solver run as out of memory.
const MEMORY_PATTERNS: &[&str] = &[
    "out of memory",
    "bad_alloc",
    "memory exhausted",
    "cannot allocate memory",
    "memory limit",
    "maximum memory",
    "memout",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverConfig {
    pub program: String,
    /// Arguments; `{file}` is replaced by the query path. Without a `{file}`
    /// placeholder the query is written to standard input.
    pub args: Vec<String>,
    pub timeout: Duration,
    /// Address-space limit applied to the child.
    pub mem_limit_mib: Option<u64>,
    /// Write the query here and leave it in place.
    pub keep_query: Option<PathBuf>,
    /// Evaluate every Sat model against the query before accepting it.
    pub check_model: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            program: std::env::var(SOLVER_ENV).unwrap_or_else(|_| DEFAULT_SOLVER.to_owned()),
            args: parse_template(DEFAULT_ARGS).unwrap_or_default(),
            timeout: DEFAULT_TIMEOUT,
            mem_limit_mib: None,
            keep_query: None,
            check_model: true,
        }
    }
}

/// Splits an argument template with shell quoting rules. `None` on
/// unbalanced quotes.
pub fn parse_template(template: &str) -> Option<Vec<String>> {
    shlex::split(template)
}

/// Default argument template for `program` under an activation encoding.
pub fn default_args(program: &str, enc: ActivationEncoding) -> &'static str {
    let is_z3 = std::path::Path::new(program).file_stem().is_some_and(|s| s == "z3");
    if is_z3 && enc == ActivationEncoding::Ite {
        Z3_SUBSTITUTION_ARGS
    } else {
        DEFAULT_ARGS
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Unsat,
    Sat(Assignment),
    Timeout,
    MemOut,
    Unknown,
    SolverError(String),
}

impl Outcome {
    pub fn tag(&self) -> &'static str {
        match self {
            Outcome::Unsat => "unsat",
            Outcome::Sat(_) => "sat",
            Outcome::Timeout => "timeout",
            Outcome::MemOut => "memout",
            Outcome::Unknown => "unknown",
            Outcome::SolverError(_) => "solver_error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub outcome: Outcome,
    pub elapsed: Duration,
    pub mem_limit_mib: Option<u64>,
    /// Path of the query file when it was kept.
    pub query_file: Option<PathBuf>,
    pub warnings: Vec<String>,
}

/// Raw result of one solver process.
#[derive(Debug)]
struct Run {
    stdout: String,
    stderr: String,
    status: Option<ExitStatus>,
    timed_out: bool,
    elapsed: Duration,
}

fn spawn(cfg: &SolverConfig, file: &Path) -> std::io::Result<(Child, bool)> {
    let file_str = file.display().to_string();
    let uses_file = cfg.args.iter().any(|a| a.contains("{file}"));
    let args: Vec<String> = cfg.args.iter().map(|a| a.replace("{file}", &file_str)).collect();
    let mut cmd = Command::new(&cfg.program);
    cmd.args(&args)
        .stdin(if uses_file { Stdio::null() } else { Stdio::piped() })
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .process_group(0);
    if let Some(mib) = cfg.mem_limit_mib {
        let bytes = mib.saturating_mul(1024 * 1024) as libc::rlim_t;
        // SAFETY: only async-signal-safe calls between fork and exec.
        unsafe {
            cmd.pre_exec(move || {
                let lim = libc::rlimit {
                    rlim_cur: bytes,
                    rlim_max: bytes,
                };
                if libc::setrlimit(libc::RLIMIT_AS, &lim) != 0 {
                    return Err(std::io::Error::last_os_error());
                }
                Ok(())
            });
        }
    }
    // A concurrent fork elsewhere in this process can briefly hold a freshly
    // written executable open for writing.
    let mut tries = 0;
    loop {
        match cmd.spawn() {
            Err(e) if e.raw_os_error() == Some(libc::ETXTBSY) && tries < 20 => {
                tries += 1;
                thread::sleep(Duration::from_millis(10));
            }
            r => return Ok((r?, !uses_file)),
        }
    }
}

fn drain<R: Read + Send + 'static>(src: Option<R>) -> thread::JoinHandle<String> {
    thread::spawn(move || {
        let mut buf = Vec::new();
        if let Some(mut s) = src {
            let _ = s.read_to_end(&mut buf);
        }
        String::from_utf8_lossy(&buf).into_owned()
    })
}

/// Whether the child has exited, without reaping it.
fn exited(pid: libc::pid_t) -> bool {
    // SAFETY: plain syscall on a zeroed out-parameter.
    unsafe {
        let mut info: libc::siginfo_t = std::mem::zeroed();
        let rc = libc::waitid(
            libc::P_PID,
            pid as libc::id_t,
            &mut info,
            libc::WEXITED | libc::WNOHANG | libc::WNOWAIT,
        );
        rc == 0 && info.si_pid() != 0
    }
}

fn kill_group(pgid: libc::pid_t) {
    // SAFETY: signalling a process group we created.
    unsafe {
        libc::killpg(pgid, libc::SIGKILL);
    }
}

fn execute(text: &str, file: &Path, cfg: &SolverConfig) -> std::io::Result<Run> {
    let start = Instant::now();
    let (mut child, via_stdin) = spawn(cfg, file)?;
    let pid = child.id() as libc::pid_t;
    let stdin = child.stdin.take();
    let feeder = via_stdin.then(|| {
        let text = text.to_owned();
        thread::spawn(move || {
            if let Some(mut s) = stdin {
                let _ = s.write_all(text.as_bytes());
            }
        })
    });
    let out = drain(child.stdout.take());
    let err = drain(child.stderr.take());

    let deadline = start + cfg.timeout;
    let mut pause = Duration::from_millis(1);
    let mut timed_out = false;
    while !exited(pid) {
        if Instant::now() >= deadline {
            timed_out = true;
            break;
        }
        thread::sleep(pause);
        pause = (pause * 2).min(Duration::from_millis(50));
    }
    // Killing before reaping keeps the group id from being reused; it also
    // removes anything the solver left running behind it.
    kill_group(pid);
    let status = child.wait()?;
    let elapsed = start.elapsed();
    if let Some(f) = feeder {
        let _ = f.join();
    }
    Ok(Run {
        stdout: out.join().unwrap_or_default(),
        stderr: err.join().unwrap_or_default(),
        status: (!timed_out).then_some(status),
        timed_out,
        elapsed,
    })
}

fn mentions_memory(run: &Run) -> bool {
    let text = format!("{}\n{}", run.stdout, run.stderr).to_lowercase();
    MEMORY_PATTERNS.iter().any(|p| text.contains(p))
}

fn stderr_detail(run: &Run) -> String {
    let s = run.stderr.trim();
    let s = if s.is_empty() { run.stdout.trim() } else { s };
    let mut tail: Vec<&str> = s.lines().rev().take(5).collect();
    tail.reverse();
    tail.join(" | ")
}

fn describe_status(status: &ExitStatus) -> String {
    match (status.code(), status.signal()) {
        (Some(c), _) => format!("exit status {c}"),
        (None, Some(s)) => format!("killed by signal {s}"),
        _ => "abnormal exit".to_owned(),
    }
}

fn interpret(q: &Query, run: &Run, cfg: &SolverConfig, warnings: &mut Vec<String>) -> Outcome {
    if run.timed_out {
        return Outcome::Timeout;
    }
    let status = run.status.expect("status of finished run");
    let answer = split_response(&run.stdout);
    match answer {
        Ok((CheckSat::Unsat, _)) => Outcome::Unsat,
        Ok((CheckSat::Unknown, _)) => {
            if mentions_memory(run) {
                Outcome::MemOut
            } else {
                Outcome::Unknown
            }
        }
        Ok((CheckSat::Sat, rest)) => sat_outcome(q, rest, cfg, warnings),
        Err(_) => {
            let killed = status.signal().is_some();
            if mentions_memory(run) || (killed && cfg.mem_limit_mib.is_some()) {
                Outcome::MemOut
            } else if !status.success() {
                Outcome::SolverError(format!("{}: {}", describe_status(&status), stderr_detail(run)))
            } else {
                Outcome::SolverError(format!("no check-sat answer in solver output: {}", stderr_detail(run)))
            }
        }
    }
}

fn sat_outcome(q: &Query, rest: &str, cfg: &SolverConfig, warnings: &mut Vec<String>) -> Outcome {
    let parsed = match parse_model(rest) {
        Ok(p) => p,
        Err(e) => return Outcome::SolverError(format!("unparseable model: {e}")),
    };
    warnings.extend(parsed.warnings);
    let declared: BTreeSet<&str> = q.declarations.iter().map(String::as_str).collect();
    let mut values = Assignment::new();
    for (name, v) in parsed.values {
        if declared.contains(name.as_str()) {
            values.insert(name, v);
        } else {
            warnings.push(format!("ignoring undeclared symbol `{name}` in model"));
        }
    }
    if let Some(missing) = q.inputs.iter().find(|x| !values.contains_key(*x)) {
        return Outcome::SolverError(format!("model has no value for input `{missing}`"));
    }
    if cfg.check_model {
        match q.formula().eval(&values) {
            Ok(true) => {}
            Ok(false) => return Outcome::SolverError("model does not satisfy the query".to_owned()),
            Err(e) => return Outcome::SolverError(format!("model check failed: {e}")),
        }
    }
    Outcome::Sat(values)
}

/// Serializes `q`, runs the configured solver on it and maps the result.
pub fn run_solver(q: &Query, cfg: &SolverConfig) -> Verdict {
    run_text(q, &serialize_smtlib(q), cfg)
}

/// Like [`run_solver`] with the query text already serialized.
pub fn run_text(q: &Query, text: &str, cfg: &SolverConfig) -> Verdict {
    let mut warnings = Vec::new();
    let fail = |detail: String, warnings: Vec<String>| Verdict {
        outcome: Outcome::SolverError(detail),
        elapsed: Duration::ZERO,
        mem_limit_mib: cfg.mem_limit_mib,
        query_file: cfg.keep_query.clone(),
        warnings,
    };
    let temp;
    let file = match &cfg.keep_query {
        Some(p) => {
            if let Err(e) = std::fs::write(p, text) {
                return fail(format!("cannot write query to {}: {e}", p.display()), warnings);
            }
            p.clone()
        }
        None => {
            temp = match tempfile::Builder::new().prefix("nnequiv-").suffix(".smt2").tempfile() {
                Ok(t) => t,
                Err(e) => return fail(format!("cannot create query file: {e}"), warnings),
            };
            if let Err(e) = std::fs::write(temp.path(), text) {
                return fail(format!("cannot write query file: {e}"), warnings);
            }
            temp.path().to_path_buf()
        }
    };
    let run = match execute(text, &file, cfg) {
        Ok(r) => r,
        Err(e) => return fail(format!("cannot run solver `{}`: {e}", cfg.program), warnings),
    };
    let outcome = interpret(q, &run, cfg, &mut warnings);
    Verdict {
        outcome,
        elapsed: run.elapsed,
        mem_limit_mib: cfg.mem_limit_mib,
        query_file: cfg.keep_query.clone(),
        warnings,
    }
}

/// First line of `<program> --version`, or the program name if that fails.
pub fn solver_identity(program: &str) -> String {
    let out = Command::new(program)
        .arg("--version")
        .stdin(Stdio::null())
        .stderr(Stdio::null())
        .output();
    match out {
        Ok(o) if o.status.success() => String::from_utf8_lossy(&o.stdout)
            .lines()
            .next()
            .map(|l| l.trim().to_owned())
            .filter(|l| !l.is_empty())
            .unwrap_or_else(|| program.to_owned()),
        _ => program.to_owned(),
    }
}
