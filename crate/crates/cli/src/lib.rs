//! Experiment harness: configuration, fixtures/IO, deterministic report
//! emission, and the experiment drivers behind the `fracfill` binary.

pub mod config;
pub mod experiments;
pub mod report;
pub mod spaceio;

pub use config::{Config, ExperimentKind};
pub use experiments::run;
