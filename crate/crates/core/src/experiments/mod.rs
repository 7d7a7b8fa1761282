//! Monte Carlo harness: replications over sampled weights, aggregate
//! statistics, exponential rate fits and reproducible records.

mod config;
mod fit;
mod harness;
mod record;

pub use config::{
    CoalescenceParams, DensityParams, ExceptionalParams, ExperimentConfig, ExperimentParams,
    MultiplicityParams, RTailParams, WanderingParams, EXPERIMENT_NAMES,
};
pub use fit::{
    bootstrap_rate_ci, calibration_study, fit_exponential_rate, survival, BootstrapCi, Calibration, RateFit,
    TailEstimate,
};
pub use harness::{effective_window, run_experiment, Harness};
pub use record::{
    mean_and_std_err, Aggregate, BallSummary, ExperimentRecord, LevelRow, Outcome, PlotCurve, Provenance,
    Replication, ScaleRow, Statistic, Table, FAILURE_LIMIT, RECORD_SCHEMA, TOOL_VERSION,
};
