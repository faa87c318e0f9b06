//! Config-driven experiments producing result bundles.

pub mod bundle;
pub mod config;
pub mod runners;

pub use bundle::{Artifact, Check, Comparison, Metric, ResultBundle};
pub use config::{ExperimentConfig, Format, OutputSection};
pub use runners::{load_suite, run, run_suite};
