//! Simulator and recovery-bounds engine for community structure observed
//! through coarse aggregate measurements of a stochastic block model.
//!
//! A fine graph on `N` nodes is drawn from a symmetric stochastic block
//! model with `K` communities (within-community edge probability `alpha *
//! rho`, across `beta * rho`). Instead of the graph itself, only `L`
//! aggregate measurements are observed: each measurement covers `k` nodes
//! and reports edge counts between coverage sets. The crate provides
//!
//! - exact and approximate laws of those aggregate weights ([`dist`]),
//! - samplers for the fine model and the coarse observation process
//!   ([`sbm`], [`coarsen`]),
//! - the extended block model induced on measurement nodes after
//!   thresholding ([`extended`]),
//! - information-theoretic recovery bounds and regime classification
//!   ([`bounds`]),
//! - reference recovery algorithms and their evaluation ([`recovery`]).
//!
//! All randomness is counter-based ([`rng`]): results are reproducible
//! bit-for-bit across runs and thread counts for a fixed master seed.

pub mod bounds;
pub mod coarsen;
pub mod dist;
pub mod extended;
pub mod recovery;
mod error;
pub mod rng;
pub mod sbm;
mod util;

pub use error::{Error, Result};
