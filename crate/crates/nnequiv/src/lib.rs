//! Model files, the solver driver, reports and the CLI for `nnequiv`.

pub use nnequiv_core as core;

pub mod cli;
pub mod format;
pub mod report;
pub mod solver;
