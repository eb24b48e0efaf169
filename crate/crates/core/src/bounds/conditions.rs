//! Recovery-condition constants and concrete condition checks.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::dist::BERRY_ESSEEN_CONSTANT;
use crate::{Error, Result};

/// One evaluated inequality inside a [`ConditionVerdict`].
///
/// `slack` is signed so that positive values mean "satisfied with room":
/// `lhs - rhs` for `>`/`>=` inequalities and `rhs - lhs` for `<=`.
#[derive(Debug, Clone, Serialize)]
pub struct Inequality {
    pub text: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub strict: bool,
    pub satisfied: bool,
}

/// Outcome of checking a set of recovery inequalities at concrete
/// parameters.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionVerdict {
    /// Conjunction of all recorded inequalities.
    pub satisfied: bool,
    /// Slack of the binding inequality (the minimum over all of them).
    pub margin: f64,
    /// Named constants the check was evaluated against.
    pub constants: BTreeMap<String, f64>,
    /// Every inequality with its own left side, right side, and slack.
    pub inequalities: Vec<Inequality>,
    /// Human-readable context, e.g. whether a limit statement was evaluated
    /// as a finite-sample proxy.
    pub notes: String,
}

/// The constants behind the coverage–density recovery threshold.
///
/// `delta` is the unique positive root of `d^3 - rho3*d^2 - rho4`; recovery
/// of the profile matrix is possible once the effective degree scale
/// `coverage * sqrt(rho)` exceeds it (together with the density conditions
/// checked by [`coverage_density_check`]).
#[derive(Debug, Clone, Serialize)]
pub struct ThresholdConstants {
    pub rho1: f64,
    pub rho2: f64,
    pub rho3: f64,
    pub rho4: f64,
    pub varpi: f64,
    pub delta: f64,
    // Echo of the inputs the constants were derived from.
    pub alpha: f64,
    pub beta: f64,
    pub nu: u32,
    pub tau: f64,
    pub rho_bar: f64,
}

/// Derives the recovery-threshold constants from the rate constants
/// (`alpha`, `beta`), the overlap budget `nu`, the binarization offset
/// `tau`, and the density cap `rho_bar`.
///
/// - `rho1`, `rho2` are the standardized separations of the two binarized
///   edge rates from the threshold;
/// - `rho3` is the worst-case Gaussian-approximation deviation, evaluated at
///   the density cap;
/// - `rho4`, `varpi`, `delta` reduce the resulting inequality to the cubic
///   `d^3 - rho3*d^2 - rho4 > 0`, whose unique real root is `delta`.
///
/// Requires `alpha != beta`, `0 < tau < 1/nu`, and `alpha*rho_bar < 1`,
/// `beta*rho_bar < 1` so that every radicand stays positive.
pub fn recovery_threshold_constants(
    alpha: f64,
    beta: f64,
    nu: u32,
    tau: f64,
    rho_bar: f64,
) -> Result<ThresholdConstants> {
    if !(alpha.is_finite() && beta.is_finite() && alpha > 0.0 && beta > 0.0) {
        return Err(Error::Domain(format!(
            "rate constants must be finite and positive, got alpha = {alpha}, beta = {beta}"
        )));
    }
    if alpha == beta {
        return Err(Error::Domain(
            "rate constants must differ (alpha != beta)".to_string(),
        ));
    }
    if nu == 0 {
        return Err(Error::Domain("overlap budget nu must be >= 1".to_string()));
    }
    let nu_f = f64::from(nu);
    if !(tau.is_finite() && tau > 0.0 && tau < 1.0 / nu_f) {
        return Err(Error::Domain(format!(
            "binarization offset tau must lie in (0, 1/nu) = (0, {}), got {tau}",
            1.0 / nu_f
        )));
    }
    if !(rho_bar.is_finite() && rho_bar > 0.0 && alpha * rho_bar < 1.0 && beta * rho_bar < 1.0) {
        return Err(Error::Domain(format!(
            "density cap must satisfy alpha*rho_bar < 1 and beta*rho_bar < 1, \
             got alpha*rho_bar = {}, beta*rho_bar = {}",
            alpha * rho_bar,
            beta * rho_bar
        )));
    }

    let inv_nu = 1.0 / nu_f;
    let rho1 = (alpha - beta) * (inv_nu - tau) / ((alpha - beta) * inv_nu + beta).sqrt();
    let rho2 = (alpha - beta) * tau / beta.sqrt();

    // Edge-rate variances at the density cap.
    let va = alpha * (1.0 - alpha * rho_bar);
    let vb = beta * (1.0 - beta * rho_bar);
    let min_var = (va * inv_nu + vb * (1.0 - inv_nu)).min(va);
    let rho3 = BERRY_ESSEEN_CONSTANT / min_var.sqrt() + BERRY_ESSEEN_CONSTANT / vb.sqrt();

    let m = rho1.abs().max(rho2.abs());
    // alpha != beta and tau > 0 force rho2 != 0, so m > 0.
    let rho4 = 2.0 * rho3 / (m * m);
    let rho3_cubed = rho3 * rho3 * rho3;
    let varpi = (3.0 * 3.0f64.sqrt() * (4.0 * rho3_cubed * rho4 + 27.0 * rho4 * rho4).sqrt()
        + 2.0 * rho3_cubed
        + 27.0 * rho4)
        .cbrt();
    let cbrt2 = 2.0f64.cbrt();
    let delta = (varpi / cbrt2 + cbrt2 * rho3 * rho3 / varpi + rho3) / 3.0;

    Ok(ThresholdConstants {
        rho1,
        rho2,
        rho3,
        rho4,
        varpi,
        delta,
        alpha,
        beta,
        nu,
        tau,
        rho_bar,
    })
}

impl ThresholdConstants {
    fn as_map(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([
            ("rho1".to_string(), self.rho1),
            ("rho2".to_string(), self.rho2),
            ("rho3".to_string(), self.rho3),
            ("rho4".to_string(), self.rho4),
            ("varpi".to_string(), self.varpi),
            ("delta".to_string(), self.delta),
        ])
    }
}

/// Checks the concrete coverage–density recovery condition:
/// `coverage * sqrt(rho) > delta`, `rho > delta^2 * (l/n)^2`, and
/// `rho <= rho_bar` (with `alpha != beta` echoed from the constants).
pub fn coverage_density_check(
    coverage: u32,
    rho: f64,
    l: u64,
    n: u64,
    constants: &ThresholdConstants,
) -> ConditionVerdict {
    let k = f64::from(coverage);
    let delta = constants.delta;
    let ratio = l as f64 / n as f64;

    let degree_scale = k * rho.sqrt();
    let density_floor = delta * delta * ratio * ratio;

    let inequalities = vec![
        Inequality {
            text: "coverage * sqrt(rho) > delta".to_string(),
            lhs: degree_scale,
            rhs: delta,
            slack: degree_scale - delta,
            strict: true,
            satisfied: degree_scale > delta,
        },
        Inequality {
            text: "rho > delta^2 * (l/n)^2".to_string(),
            lhs: rho,
            rhs: density_floor,
            slack: rho - density_floor,
            strict: true,
            satisfied: rho > density_floor,
        },
        Inequality {
            text: "rho <= rho_bar".to_string(),
            lhs: rho,
            rhs: constants.rho_bar,
            slack: constants.rho_bar - rho,
            strict: false,
            satisfied: rho <= constants.rho_bar,
        },
        Inequality {
            text: "alpha != beta".to_string(),
            lhs: constants.alpha,
            rhs: constants.beta,
            slack: (constants.alpha - constants.beta).abs(),
            strict: true,
            satisfied: constants.alpha != constants.beta,
        },
    ];
    let satisfied = inequalities.iter().all(|i| i.satisfied);
    let margin = inequalities
        .iter()
        .map(|i| i.slack)
        .fold(f64::INFINITY, f64::min);
    ConditionVerdict {
        satisfied,
        margin,
        constants: constants.as_map(),
        inequalities,
        notes: String::new(),
    }
}

/// Which limit a recovery statement for the single-overlap model is taken
/// in: the number of coarse nodes held fixed, or growing without bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitRegime {
    FiniteL,
    GrowingL,
}

/// Checks the exact-recovery condition for the single-overlap model.
///
/// - `FiniteL`: with a fixed number of coarse nodes the failure bound
///   vanishes once the per-pair Rényi divergence diverges, which needs
///   `alpha != beta` and `coverage * sqrt(rho) -> infinity`; the check
///   verifies the rate gap and reports the finite value of
///   `coverage * sqrt(rho)` as the diverging quantity.
/// - `GrowingL`: the limit statement
///   `(alpha+beta)/2 - sqrt(alpha*beta) > (K/2) * log(l) / (coverage^2 * rho * l)`
///   is evaluated at the given finite parameters as an asymptotic proxy
///   (natural logarithm).
pub fn exact_recovery_check(
    alpha: f64,
    beta: f64,
    k_communities: u32,
    coverage: u32,
    rho: f64,
    l: u64,
    regime: LimitRegime,
) -> Result<ConditionVerdict> {
    if !(alpha.is_finite() && beta.is_finite() && alpha >= 0.0 && beta >= 0.0) {
        return Err(Error::Domain(format!(
            "rate constants must be finite and nonnegative, got alpha = {alpha}, beta = {beta}"
        )));
    }
    if !(rho.is_finite() && rho > 0.0 && rho <= 1.0) {
        return Err(Error::Domain(format!(
            "fine connection rate rho must lie in (0, 1], got {rho}"
        )));
    }
    if k_communities == 0 || coverage == 0 || l == 0 {
        return Err(Error::Domain(
            "k_communities, coverage, and l must all be >= 1".to_string(),
        ));
    }

    let k = f64::from(coverage);
    let degree_scale = k * rho.sqrt();
    let mut constants = BTreeMap::from([("coverage_sqrt_rho".to_string(), degree_scale)]);

    match regime {
        LimitRegime::FiniteL => {
            let inequalities = vec![Inequality {
                text: "alpha != beta".to_string(),
                lhs: alpha,
                rhs: beta,
                slack: (alpha - beta).abs(),
                strict: true,
                satisfied: alpha != beta,
            }];
            let satisfied = inequalities[0].satisfied;
            let margin = inequalities[0].slack;
            Ok(ConditionVerdict {
                satisfied,
                margin,
                constants,
                inequalities,
                notes: "finite-size branch: recovery additionally needs \
                        coverage * sqrt(rho) -> infinity; the reported \
                        coverage_sqrt_rho is that quantity at the given \
                        parameters"
                    .to_string(),
            })
        }
        LimitRegime::GrowingL => {
            let lhs = (alpha + beta) / 2.0 - (alpha * beta).sqrt();
            let rhs = f64::from(k_communities) / 2.0 * (l as f64).ln() / (k * k * rho * l as f64);
            constants.insert("rate_gap".to_string(), lhs);
            constants.insert("required_gap".to_string(), rhs);
            let inequalities = vec![Inequality {
                text: "(alpha+beta)/2 - sqrt(alpha*beta) > (K/2) * log(l) / (coverage^2 * rho * l)"
                    .to_string(),
                lhs,
                rhs,
                slack: lhs - rhs,
                strict: true,
                satisfied: lhs > rhs,
            }];
            let satisfied = inequalities[0].satisfied;
            let margin = inequalities[0].slack;
            Ok(ConditionVerdict {
                satisfied,
                margin,
                constants,
                inequalities,
                notes: "asymptotic proxy: the growing-size limit inequality \
                        evaluated at the given finite parameters"
                    .to_string(),
            })
        }
    }
}
