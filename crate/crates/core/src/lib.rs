//! Simulation and genetic-algorithm tuning of passive and active vehicle
//! suspensions.
//!
//! The crate builds linear quarter-car and full-car state-space models,
//! drives them with parametric road obstacles, closes the loop with
//! per-corner PID force actuators, and tunes PID gains and suspension
//! parameters with a real-coded genetic algorithm under either an LQR-style
//! quadratic cost or a constraint-penalty cost.

pub mod control;
pub mod error;
pub mod ga;
pub mod metrics;
pub mod objectives;
pub mod road;
pub mod sim;
pub mod tuning;
pub mod vehicle;

pub use error::{Error, Result};
