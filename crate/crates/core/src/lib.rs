//! Seeded Monte-Carlo simulation of intermodal freight trip costs as
//! transport modes improve year over year.
//!
//! The pipeline is: [`modes`] supplies per-mode costs and improvement rates,
//! [`tripsim`] builds and costs random multi-leg trips, [`evolution`] runs
//! replicates across the horizon, [`analysis`] extracts cross-over years and
//! summaries, and [`report`] renders CSV and SVG output.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod error;
pub mod evolution;
pub mod modes;
pub mod report;
pub mod stochastics;
pub mod tripsim;

pub use config::{load_config, ScenarioConfig};
pub use error::{Error, Result};
pub use evolution::{
    run_replicate, run_scenario, run_scenario_with_workers, EvolutionPolicy, ResultSet,
};
pub use modes::{builtin_modes, ModeId, ModeRegistry, ModeSpec};
