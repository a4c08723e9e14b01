//! Experiment harness around `ddsolve-core`.
//!
//! - [`config`]: per-experiment defaults, TOML config-file sections, and
//!   command-line override layering with validation.
//! - [`csv`]: typed CSV cells and rectangular tables with full-precision
//!   float formatting.
//! - [`experiments`]: the drivers behind each `ddsolve` subcommand, exposed
//!   as library functions returning typed records so tests can assert on
//!   numbers rather than parse text.

pub mod config;
pub mod csv;
pub mod experiments;

pub use config::{resolve, ConfigLayer, Experiment, ExperimentConfig, MethodKind};
pub use csv::{CsvTable, CsvValue};
pub use experiments::{
    classify_boundedness, run_baumgarte, run_convergence, run_counterexample, run_heat,
    run_split_dof, BaumgarteOutput, ConvergenceOutput, CounterexampleOutput, HeatOutput,
    SplitDofOutput, Verdict,
};
