#![allow(dead_code)]

pub mod schema;

use std::os::unix::fs::PermissionsExt;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use nnequiv::core::equivalence::{QueryMeta, VarCounts};
use nnequiv::core::{EquivalenceRelation, Formula, Network, Query};
use nnequiv::format::read_network;
use nnequiv::solver::SolverConfig;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn load(name: &str) -> Network {
    read_network(&fixture(name)).expect("fixture loads")
}

/// Default solver from the environment, if it runs.
pub fn solver() -> Option<SolverConfig> {
    let cfg = SolverConfig::default();
    let ok = Command::new(&cfg.program)
        .arg("--version")
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .status()
        .map(|s| s.success())
        .unwrap_or(false);
    if ok {
        Some(cfg)
    } else {
        eprintln!("skipping: solver `{}` not available", cfg.program);
        None
    }
}

/// Executable shell script `name` in `dir` with the given body.
pub fn script(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, format!("#!/bin/sh\n{body}\n")).unwrap();
    std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
    path
}

/// Bare query over the listed variables, the first being the only input.
pub fn raw_query(vars: &[&str], assertions: Vec<Formula>) -> Query {
    Query {
        declarations: vars.iter().map(|v| v.to_string()).collect(),
        assertions,
        meta: QueryMeta {
            relation: EquivalenceRelation::Strict,
            net_a: "a".into(),
            net_b: "b".into(),
            input_dim: 1,
            output_dim: 0,
            counts: VarCounts::default(),
            bounds_asserted: false,
            grid_mode: false,
            activation_encoding: Default::default(),
            warnings: Vec::new(),
        },
        inputs: vec![vars[0].to_string()],
        outputs_a: Vec::new(),
        outputs_b: Vec::new(),
    }
}
