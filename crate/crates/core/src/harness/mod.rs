//! Configuration, orchestration and file output for the benchmark runs.

mod config;
mod output;

pub use config::{Config, Overrides};
pub use output::{
    estimates_csv, fmt_num, meta_json, observations_csv, per_run_scores, rmse_csv, summary_csv,
    write_artifacts, write_atomic, write_summary,
};

use std::path::PathBuf;

use crate::error::Result;
use crate::experiments::{run_experiment, RunArtifacts};

/// Runs the configured experiment and writes the per-filter files.
pub fn main_run(cfg: &Config) -> Result<(RunArtifacts, Vec<PathBuf>)> {
    let art = execute(cfg)?;
    let dirs = write_artifacts(cfg, &art)?;
    Ok((art, dirs))
}

/// As [`main_run`], then writes `summary.csv` once every run is done.
pub fn compare(cfg: &Config) -> Result<(RunArtifacts, PathBuf)> {
    if cfg.filters.len() < 2 {
        return Err(crate::FilterError::config(
            "filters",
            "compare needs at least two filters",
        ));
    }
    let (art, _) = main_run(cfg)?;
    let path = write_summary(cfg, &art)?;
    Ok((art, path))
}

fn execute(cfg: &Config) -> Result<RunArtifacts> {
    cfg.validate()?;
    run_experiment(
        cfg.experiment.as_str(),
        &cfg.problem()?,
        &cfg.filters,
        cfg.runs,
        cfg.seed,
        cfg.worker_threads(),
    )
}
