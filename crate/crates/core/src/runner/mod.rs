//! Experiment harness behind the `qic` command line: configuration, sweeps,
//! fits over finished runs and figure/table reproduction.

pub mod config;
pub mod fit;
pub mod output;
pub mod reproduce;
pub mod single;
pub mod sweep;

pub use config::{RunConfig, SweepParameter, SEED_ENV};
pub use fit::{analyse_run, fit_run, FitReport};
pub use reproduce::{reproduce, Figure, ReproduceOptions};
pub use single::{run_ergodize, run_lanczos};
pub use sweep::{run_sweep, RunManifest, Status};
