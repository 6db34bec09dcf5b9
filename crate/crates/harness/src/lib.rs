//! Experiment harness for matching-market bandit simulations: spec and
//! config files, random market generators, seeded runs with CSV traces,
//! parameter sweeps, paired deviation experiments and offline audits.

pub mod config;
pub mod deviation;
pub mod experiment;
pub mod generator;
pub mod report;
pub mod specfile;
pub mod sweep;
pub mod verify;

pub use config::{Algorithm, Deviation, DeviationPolicy, ExperimentConfig, MarketSource};
pub use experiment::{run_experiment, Prepared, RunRecord};
pub use specfile::SpecFile;
