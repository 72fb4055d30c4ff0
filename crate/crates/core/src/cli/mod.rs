//! Batch experiment runner: configuration, suites and reports.

mod config;
mod report;
mod run;
pub mod suites;

pub use config::{
    load, locate, parse, validate, ComparisonConfig, ControlConfig, Diagnostic, ExpectationConfig, ExperimentConfig,
    MetricConfig, RegularizationConfig, ResidualConfig, StepConfig, StoppingConfig, TerminalConfig, TransformConfig,
};
pub use report::{num, Check, SuiteReport, Table};
pub use run::{find_suite, run, run_suite, write_outputs, RunSummary};
pub use suites::{SuiteInfo, SUITES};
