//! Benchmark problems: synthetic truth and observations, the filter
//! settings of each named experiment, and RMSE scoring.

pub mod frame;
pub mod growth;
mod metrics;
mod runner;
pub mod tracking;

pub use metrics::{rmse_series, time_averaged_rmse, win_rate};
pub use runner::{
    build_filter, filter_key, run_experiment, truth_stream_id, with_context, Component,
    ExperimentName, FilterDefaults, FilterKind, FilterOutcome, FilterSpec, GrowthSetup, Problem,
    ProblemInstance, RunArtifacts, TrackingSetup,
};
