//! Configuration, Monte-Carlo execution and on-disk artifacts.

pub mod config;
pub mod experiment;
pub mod output;

pub use config::{ModeChoice, Overrides, SimConfig, TargetKind};
pub use experiment::{
    run_experiment, run_fixed_target, run_target_grid, AlgorithmReport, ExperimentReport, Simulation, TraceRow,
    TrialSink,
};
pub use output::{summarize_dir, write_report, TrialLog};
