//! Monte-Carlo simulation, experiment orchestration and self-validation.

pub mod config;
mod sim;
pub mod validate;

pub use sim::{
    run_experiment, run_experiment_with_code, simulate_point, Experiment, SimBerPoint, SimConfig,
    SIM_CSV_HEADER,
};
