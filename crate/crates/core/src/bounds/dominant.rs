//! Closed-form lower estimate of the pairwise divergence from its dominant
//! summand.

use crate::dist::{normal_cdf, BERRY_ESSEEN_CONSTANT};
use crate::extended::ExtendedSbm;
use crate::{Error, Result};

/// Closed-form lower estimate of the scaled Chernoff–Hellinger divergence
/// for one pair of extended communities.
///
/// Fixing the interpolation parameter at 1/2 and keeping only the summand of
/// the community best separating the two profiles turns the divergence into
/// `s/2 * (sqrt(T1) - sqrt(T2))^2`, where `T1` and `T2` are Gaussian tail
/// estimates of the two connectivity entries with their deviation bounds
/// folded in pessimistically (subtract from the larger tail, add to the
/// smaller) and clamped at 0, and `s` is the prior mass of the dominating
/// single-community profile.
///
/// The fine-graph rate constants are recovered from the model's edge
/// probabilities as `alpha = p / rho` and `beta = q / rho`.
///
/// Conventions and domain:
/// - equal rates (`p == q`) make the two tails indistinguishable and the
///   estimate is 0 by convention;
/// - the binarization offset must satisfy `0 < tau < 1/nu`, else the
///   derivation's sign assumptions fail and a domain error is returned;
/// - `rho` must lie in `(0, 1]`.
pub fn divergence_floor(model: &ExtendedSbm, pair: (usize, usize), rho: f64) -> Result<f64> {
    let k_nu = model.k_nu();
    let (ka, kb) = pair;
    if ka >= k_nu || kb >= k_nu || ka == kb {
        return Err(Error::InvalidParams(format!(
            "pair ({ka}, {kb}) is not a pair of distinct extended-community \
             indices below {k_nu}"
        )));
    }
    if !rho.is_finite() || rho <= 0.0 || rho > 1.0 {
        return Err(Error::Domain(format!(
            "fine connection rate rho must lie in (0, 1], got {rho}"
        )));
    }
    let p = model.p();
    let q = model.q();
    let tau = model.tau();
    let alpha = p / rho;
    let beta = q / rho;
    if alpha == beta {
        return Ok(0.0);
    }
    let nu = model.nu() as f64;
    if !(tau > 0.0 && tau < 1.0 / nu) {
        return Err(Error::Domain(format!(
            "binarization offset tau must lie in (0, 1/nu) = (0, {}), got {tau}",
            1.0 / nu
        )));
    }

    let coverage = model.coverage();
    let k = f64::from(coverage);
    let a = &model.profiles()[ka];
    let a_prime = &model.profiles()[kb];

    // Largest normalized profile entry across both profiles.
    let omega = a
        .iter()
        .chain(a_prime.iter())
        .copied()
        .max()
        .expect("profiles are non-empty") as f64
        / k;

    // The community where the two profiles differ most (first index on
    // ties); the dominant summand belongs to the profile fully concentrated
    // there.
    let star = (0..a.len())
        .max_by_key(|&v| {
            // max_by_key keeps the last maximum; the inverted index keeps
            // the first community on ties instead.
            (a[v].abs_diff(a_prime[v]), usize::MAX - v)
        })
        .expect("profiles are non-empty");
    let mut concentrated = vec![0u32; a.len()];
    concentrated[star] = coverage;
    let k_hat = model
        .index_of(&concentrated)
        .expect("single-community profiles are always part of the profile set");
    let s_hat = model.prior()[k_hat];

    let d = k * rho.sqrt();
    let be = BERRY_ESSEEN_CONSTANT;

    // Tail estimate of the entry whose profiles share mass omega with the
    // concentrated profile, and of the entry sharing nothing with it.
    let shared_psi = normal_cdf((alpha - beta) * (omega - tau) / ((alpha - beta) * omega + beta).sqrt() * d);
    let shared_dev = be / (d * (alpha * (1.0 - p) * omega + beta * (1.0 - q) * (1.0 - omega)).sqrt());
    let disjoint_psi = normal_cdf((alpha - beta) * (-tau) / beta.sqrt() * d);
    let disjoint_dev = be / (d * (beta * (1.0 - q)).sqrt());

    let (term1, term2) = if alpha > beta {
        (
            (shared_psi - shared_dev).max(0.0),
            (disjoint_psi + disjoint_dev).max(0.0),
        )
    } else {
        (
            (disjoint_psi - disjoint_dev).max(0.0),
            (shared_psi + shared_dev).max(0.0),
        )
    };
    Ok(s_hat / 2.0 * (term1.sqrt() - term2.sqrt()).powi(2))
}
