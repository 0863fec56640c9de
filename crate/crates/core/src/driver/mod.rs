//! Configuration, the coupled time loop, and file output.

pub mod config;
pub mod io;
pub mod run;

pub use config::ConfigSpec;
pub use run::{coupled_step, run_simulation, RunSummary, Simulation, Termination};
