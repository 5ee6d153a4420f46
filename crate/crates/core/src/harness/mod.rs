//! Experiment configuration, drivers and CSV output.

pub mod config;
pub mod csv;
pub mod run;

use std::path::PathBuf;

pub use config::{ExperimentConfig, ModelKind, Scenario, Scheme};
pub use run::{
    build_problem, compare_schemes, run_convergence, run_evolution, CompareRow, ConvergenceRow,
    Problem, Row, RunRecord, Snapshot,
};

/// Environment variable naming the output directory.
pub const OUT_DIR_ENV: &str = "EPX_OUT_DIR";

/// `$EPX_OUT_DIR`, or `./out`.
pub fn output_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out"))
}
