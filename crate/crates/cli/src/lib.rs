//! Experiment orchestration and output rendering for the `trussfd` binary.

pub mod config;
pub mod run;
pub mod svg;
