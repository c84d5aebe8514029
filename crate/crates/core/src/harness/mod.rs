//! Experiment driver: configuration, mobility, the per-slot loop of every
//! algorithm, metrics and CSV output.

mod config;
mod metrics;
mod mobility;
mod output;
mod run;

pub use config::{Algo, ExperimentConfig};
pub use metrics::{
    average, expected_paoi_pair, jain_index, mean_rates, mean_total_powers, metrics, Summary,
};
pub use mobility::{uniform_point, user_mobility_step, UserMobility};
pub use output::{
    rep_seed, run_experiment, run_experiments, run_reps, write_summary_csv, write_trace_csv,
    AlgoResult, SUMMARY_HEADER, TRACE_HEADER,
};
pub use run::{
    circle_layout, circle_positions, derive_seed, random_delivery, random_fleet, run_algorithm,
    run_benchmark, run_f2e2cp, RunTrace, SlotRecord, CIRCLE_SPEED,
};
