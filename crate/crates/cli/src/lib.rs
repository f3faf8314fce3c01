//! Scenario files, trace CSV and analysis reports for `gift-economy`.

pub mod check;
pub mod config;
pub mod emit;

pub use config::{parse_scenario, Analysis, ConfigError, ScenarioFile};
pub use emit::{emit_report, emit_trace, ReportError};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/scenario-files.md")]
mod scenario_files_chapter {}
