//! Scenario-driven simulation: network construction, the tick loop,
//! failure injection and metrics.

pub mod config;
pub mod demo;
mod metrics;
pub mod topology;
mod world;

pub use config::{ConfigError, ScenarioConfig};
pub use demo::demo_transcript;
pub use metrics::{Metrics, CSV_HEADER};
pub use world::{build_network, run_scenario, FailureReport, World};

/// Loads, builds and runs a scenario file.
pub fn run_file(path: impl AsRef<std::path::Path>, seed: Option<u64>) -> Result<(World, Metrics), ConfigError> {
    let mut cfg = ScenarioConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let mut world = build_network(&cfg)?;
    let metrics = run_scenario(&mut world, &cfg);
    Ok((world, metrics))
}

#[cfg(test)]
mod tests;
