//! Scenario files, orchestration and persistence.

pub mod appendix;
pub mod config;
pub mod manifest;
pub mod run;
pub mod snapshot;

pub use appendix::{verify_appendix, AppendixReport};
pub use config::{ConfigError, ScenarioConfig};
pub use manifest::{verify_manifest, RunManifest, RunStatus};
pub use run::run_scenario;

/// Formats a double with 17 significant digits (lossless round trip).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
