//! Library surface of the experiment driver, exposed for integration
//! tests and downstream tooling; the `coarse-bench` binary is a thin CLI
//! over these modules.

pub mod config;
pub mod csvout;
pub mod ops;
