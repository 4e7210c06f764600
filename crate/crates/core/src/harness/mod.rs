//! Verification suite: configs, registered checks, reports and plots.

pub mod checks;
pub mod config;
pub mod report;
pub mod svg;

pub use checks::{run_check, CheckOutcome, CheckSpec, Comparison, Provenance, SuiteContext, REGISTRY};
pub use config::{ExperimentConfig, Sweep, Tolerances};
pub use report::{run_suite, write_artifacts, GoldenRecord, SuiteReport};
