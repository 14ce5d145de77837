//! Experiment orchestration: configuration, on-disk artifacts, and the
//! subcommand implementations behind the `dgqa` binary.

pub mod config;
pub mod gds;
pub mod manifest;
pub mod pipeline;
pub mod report;
pub mod synth;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use config::ExperimentConfig;
use manifest::write_json;

/// `run.json`: the reproducibility record every subcommand leaves behind.
/// Re-running the same subcommand with this file as `--config` reproduces
/// all numeric artifacts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecordFile {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    /// Every derived seed the run consumed, in order.
    pub seeds: Vec<u64>,
    pub config: ExperimentConfig,
}

pub fn write_run_record(
    out_dir: &Path,
    command: &str,
    config: &ExperimentConfig,
    seeds: &[u64],
) -> Result<()> {
    let record = RunRecordFile {
        command: command.to_string(),
        config_hash: config.hash(),
        seed: config.seed,
        seeds: seeds.to_vec(),
        config: config.clone(),
    };
    write_json(&out_dir.join("run.json"), &record)
}
