//! Building HVAC control as a multi-objective contextual MDP.
//!
//! * [`thermal`]: lumped RC thermal network with a checked explicit integrator.
//! * [`context`]: envelope U-values, layouts and climates mapped to model instances.
//! * [`env`]: episodic environment with thermal, cost and ramp rewards.
//! * [`metrics`]: Pareto filtering, hypervolume, expected utility, sparsity.
//! * [`morl`]: multi-policy trainer with Pareto initialization and constrained extension.
//! * [`harness`]: experiment specs, multi-run evaluation and report tables.

pub mod context;
pub mod env;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod morl;
pub mod thermal;

pub use error::{Error, Result};
