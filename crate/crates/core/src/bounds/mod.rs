//! Analytical error bounds and recovery-condition checks.
//!
//! This module collects everything that can be said about the coarse model
//! without simulating it:
//!
//! - [`ch_divergence`]: the scaled Chernoff–Hellinger divergence between two
//!   extended-community connectivity columns, the exponent that drives the
//!   MAP failure bound.
//! - [`map_failure_bound`] / [`map_failure_report`]: the union bound on the
//!   probability that exact profile recovery fails, one exponential term per
//!   unordered pair of extended communities.
//! - [`divergence_floor`]: a closed-form lower estimate of the divergence for
//!   one pair, built from its dominant summand and Gaussian tail bounds.
//! - [`recovery_threshold_constants`] / [`coverage_density_check`]: the
//!   constants (rho1..rho4, varpi, delta) behind the coverage–density
//!   recovery condition `k·sqrt(rho) > delta`, and the check itself.
//! - [`renyi_counting_bound`]: the single-community-per-node failure bound
//!   that counts misassignment patterns weighted by Rényi-divergence decay.
//! - [`exact_recovery_check`]: the finite-size / growing-size recovery
//!   conditions for the single-overlap model.
//! - [`classify_regime`]: the symbolic scaling classifier reproducing the
//!   possible/impossible regime tables for both constraint families.

mod ch;
mod conditions;
mod dominant;
mod lemma2;
mod regimes;

use std::collections::BTreeMap;

use serde::Serialize;

pub use ch::{ch_divergence, map_failure_bound, map_failure_report, ChResult, VariantBound};
pub use conditions::{
    coverage_density_check, exact_recovery_check, recovery_threshold_constants, ConditionVerdict,
    Inequality, LimitRegime, ThresholdConstants,
};
pub use dominant::divergence_floor;
pub use lemma2::renyi_counting_bound;
pub use regimes::{
    canonical_rows, classify_regime, CanonicalRow, Condition, RegimeConstants, RegimeFamily,
    RegimeVerdict, Scaling,
};

/// Which analytical machinery produced a [`BoundReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMethod {
    /// Union bound over extended-community pairs with Chernoff–Hellinger
    /// exponents (multi-overlap model).
    ChUnion,
    /// Misassignment-counting bound driven by the Rényi divergence of order
    /// 1/2 (single-overlap model).
    RenyiCounting,
}

/// Failure-probability exponent for one unordered pair of extended
/// communities, under each connectivity ambiguity variant.
///
/// Each exponent is `l * D` where `D` is the scaled Chernoff–Hellinger
/// divergence of the pair's connectivity columns; the pair contributes
/// `exp(-exponent)` to the union bound.
#[derive(Debug, Clone, Serialize)]
pub struct PairExponent {
    pub k: usize,
    pub k_prime: usize,
    pub exponent_mean: f64,
    pub exponent_lower: f64,
    pub exponent_upper: f64,
}

/// An upper bound on the MAP failure probability, reported both raw and
/// clamped, under all three connectivity ambiguity variants.
///
/// The tail of the edge-weight distribution is only available as a band
/// (mean of a normal approximation plus a deviation bound), so every bound
/// is evaluated three times: at the band's mean, lower, and upper edge.
/// The three results are recorded side by side rather than ordered — the
/// bound is not monotone in the connectivity entries, so no variant is
/// guaranteed to dominate another.
///
/// `raw_*` is the literal sum of exponential terms (it may exceed 1);
/// `bound_*` is the same value clamped to `[0, 1]` for use as a probability.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub method: BoundMethod,
    pub l: u64,
    pub raw_mean: f64,
    pub raw_lower: f64,
    pub raw_upper: f64,
    pub bound_mean: f64,
    pub bound_lower: f64,
    pub bound_upper: f64,
    /// One entry per unordered pair of extended communities; empty for the
    /// counting bound, which has no per-pair structure.
    pub per_pair_exponents: Vec<PairExponent>,
    /// Full echo of the inputs the bound was evaluated from.
    pub params_echo: BTreeMap<String, serde_json::Value>,
}
