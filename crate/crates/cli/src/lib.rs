//! Experiment harness for the compute-and-forward toolkit: a TOML run
//! configuration, deterministic CSV tables, SVG line charts and a run
//! record for every experiment.

pub mod commands;
pub mod config;
pub mod output;
pub mod stats;
pub mod svg;

pub use commands::{execute, write, Experiment, Report};
pub use config::{Overrides, RunConfig};
