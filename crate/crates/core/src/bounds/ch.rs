//! Scaled Chernoff–Hellinger divergence and the pairwise union bound on MAP
//! failure.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::{BoundMethod, BoundReport, PairExponent};
use crate::coarsen::validate_prior;
use crate::extended::{ExtendedSbm, UVariant};
use crate::util::compensated_sum;
use crate::{Error, Result};

/// Probabilities are clipped to this range before taking logarithms, so that
/// tails that underflowed to exactly 0 or rounded to exactly 1 stay usable.
const CLIP_LO: f64 = 1e-300;
const CLIP_HI: f64 = 1.0 - 1e-16;

/// Number of points in the initial dense scan over `t` (step 1e-3).
const GRID_POINTS: usize = 1001;

/// Width at which golden-section refinement of the maximizer stops.
const REFINE_TOL: f64 = 1e-8;

/// Result of maximizing the scaled Chernoff–Hellinger divergence over the
/// interpolation parameter `t in [0, 1]`.
#[derive(Debug, Clone, Serialize)]
pub struct ChResult {
    /// The divergence value; nonnegative, and 0 when the two columns agree.
    pub value: f64,
    /// The maximizing `t`.
    pub argmax_t: f64,
    /// The extended-community pair the columns belong to, when known.
    pub pair: Option<(usize, usize)>,
}

/// The bound for a single connectivity ambiguity variant.
#[derive(Debug, Clone, Serialize)]
pub struct VariantBound {
    /// Literal sum of `exp(-l * divergence)` over all unordered pairs; may
    /// exceed 1.
    pub raw: f64,
    /// `raw` clamped to `[0, 1]`.
    pub clamped: f64,
    /// `(k, k_prime, l * divergence)` per unordered pair, in lexicographic
    /// pair order.
    pub exponents: Vec<(usize, usize, f64)>,
}

/// `u^t * v^(1-t)` with the continuity conventions needed at the endpoints
/// and at exact zeros: `0^0 = 1` at `t = 0` and `t = 1`, and the product is
/// 0 for interior `t` whenever either factor is exactly 0.
fn cross_term(u: f64, v: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return v;
    }
    if t >= 1.0 {
        return u;
    }
    if u == 0.0 || v == 0.0 {
        return 0.0;
    }
    let lu = u.clamp(CLIP_LO, CLIP_HI).ln();
    let lv = v.clamp(CLIP_LO, CLIP_HI).ln();
    (t * lu + (1.0 - t) * lv).exp()
}

/// The divergence objective at a fixed `t`.
fn objective(u_col: &[f64], v_col: &[f64], prior: &[f64], t: f64) -> f64 {
    compensated_sum((0..u_col.len()).map(|i| {
        let u = u_col[i];
        let v = v_col[i];
        prior[i] * (t * u + (1.0 - t) * v - cross_term(u, v, t))
    }))
}

/// Golden-section search for the maximum of `f` on `[a, b]`.
///
/// Assumes `f` is unimodal on the bracket, which holds here because every
/// summand of the objective is concave in `t`.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        }
    }
    let t = 0.5 * (a + b);
    (t, f(t))
}

/// Scaled Chernoff–Hellinger divergence between two connectivity columns.
///
/// Maximizes `sum_i prior[i] * (t*u[i] + (1-t)*v[i] - u[i]^t * v[i]^(1-t))`
/// over `t in [0, 1]` by a 1001-point dense scan followed by golden-section
/// refinement of the bracketing interval. Each summand is nonnegative
/// (weighted AM–GM), so the divergence is nonnegative, and it vanishes
/// exactly when the columns agree.
pub fn ch_divergence(u_col_k: &[f64], u_col_kp: &[f64], prior: &[f64]) -> Result<ChResult> {
    if u_col_k.len() != u_col_kp.len() {
        return Err(Error::LengthMismatch {
            context: "divergence columns",
            left: u_col_k.len(),
            right: u_col_kp.len(),
        });
    }
    if prior.len() != u_col_k.len() {
        return Err(Error::LengthMismatch {
            context: "divergence prior",
            left: prior.len(),
            right: u_col_k.len(),
        });
    }
    validate_prior(prior, prior.len())?;

    let f = |t: f64| objective(u_col_k, u_col_kp, prior, t);

    let step = 1.0 / (GRID_POINTS - 1) as f64;
    let mut best_t = 0.0;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..GRID_POINTS {
        let t = i as f64 * step;
        let v = f(t);
        if v > best_v {
            best_v = v;
            best_t = t;
        }
    }

    let a = (best_t - step).max(0.0);
    let b = (best_t + step).min(1.0);
    let (t_ref, v_ref) = golden_max(f, a, b, REFINE_TOL);

    let (argmax_t, value) = if v_ref >= best_v {
        (t_ref, v_ref)
    } else {
        (best_t, best_v)
    };
    Ok(ChResult {
        value: value.max(0.0),
        argmax_t,
        pair: None,
    })
}

/// Union bound on MAP failure for one connectivity ambiguity variant:
/// `sum over pairs k < k' of exp(-l * D(column k, column k'))`.
///
/// Pairs are processed in parallel; the result is deterministic because the
/// collection preserves pair order.
pub fn map_failure_bound(model: &ExtendedSbm, l: u64, variant: UVariant) -> Result<VariantBound> {
    let k_nu = model.k_nu();
    let prior = model.prior();
    let pairs: Vec<(usize, usize)> = (0..k_nu)
        .flat_map(|k| ((k + 1)..k_nu).map(move |kp| (k, kp)))
        .collect();
    let exponents: Vec<(usize, usize, f64)> = pairs
        .par_iter()
        .map(|&(k, kp)| {
            let col_k = model.u_column(variant, k);
            let col_kp = model.u_column(variant, kp);
            let ch = ch_divergence(&col_k, &col_kp, prior)?;
            Ok((k, kp, l as f64 * ch.value))
        })
        .collect::<Result<Vec<_>>>()?;
    let raw = compensated_sum(exponents.iter().map(|&(_, _, e)| (-e).exp()));
    Ok(VariantBound {
        raw,
        clamped: raw.clamp(0.0, 1.0),
        exponents,
    })
}

/// Union bound on MAP failure under all three connectivity ambiguity
/// variants, with per-pair exponents and a full input echo.
pub fn map_failure_report(model: &ExtendedSbm, l: u64) -> Result<BoundReport> {
    let mean = map_failure_bound(model, l, UVariant::Mean)?;
    let lower = map_failure_bound(model, l, UVariant::Lower)?;
    let upper = map_failure_bound(model, l, UVariant::Upper)?;

    let per_pair_exponents = mean
        .exponents
        .iter()
        .zip(lower.exponents.iter())
        .zip(upper.exponents.iter())
        .map(|((&(k, kp, em), &(_, _, el)), &(_, _, eu))| PairExponent {
            k,
            k_prime: kp,
            exponent_mean: em,
            exponent_lower: el,
            exponent_upper: eu,
        })
        .collect();

    let mut params_echo = BTreeMap::new();
    params_echo.insert("l".to_string(), json!(l));
    params_echo.insert("k_communities".to_string(), json!(model.k_communities()));
    params_echo.insert("coverage".to_string(), json!(model.coverage()));
    params_echo.insert("nu".to_string(), json!(model.nu()));
    params_echo.insert("k_nu".to_string(), json!(model.k_nu()));
    params_echo.insert("p".to_string(), json!(model.p()));
    params_echo.insert("q".to_string(), json!(model.q()));
    params_echo.insert("tau".to_string(), json!(model.tau()));
    params_echo.insert(
        "threshold_value".to_string(),
        json!(model.threshold_value()),
    );
    params_echo.insert("prior".to_string(), json!(model.prior()));
    params_echo.insert("exact_path".to_string(), json!(model.exact_path()));

    Ok(BoundReport {
        method: BoundMethod::ChUnion,
        l,
        raw_mean: mean.raw,
        raw_lower: lower.raw,
        raw_upper: upper.raw,
        bound_mean: mean.clamped,
        bound_lower: lower.clamped,
        bound_upper: upper.clamped,
        per_pair_exponents,
        params_echo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extended::{build_extended_sbm_default, PriorSpec};

    #[test]
    fn identical_columns_have_zero_divergence() {
        let col = vec![0.3, 0.7, 0.05];
        let prior = vec![0.5, 0.25, 0.25];
        let res = ch_divergence(&col, &col, &prior).unwrap();
        assert!(res.value.abs() < 1e-12, "value {}", res.value);
    }

    #[test]
    fn swapping_columns_preserves_value_and_mirrors_argmax() {
        let u = vec![0.9, 0.2, 0.4];
        let v = vec![0.1, 0.6, 0.35];
        let prior = vec![0.2, 0.5, 0.3];
        let fwd = ch_divergence(&u, &v, &prior).unwrap();
        let rev = ch_divergence(&v, &u, &prior).unwrap();
        assert!((fwd.value - rev.value).abs() < 1e-10);
        assert!(
            (fwd.argmax_t - (1.0 - rev.argmax_t)).abs() < 1e-6,
            "argmax {} vs mirrored {}",
            fwd.argmax_t,
            rev.argmax_t
        );
    }

    #[test]
    fn single_cell_matches_dense_scan_oracle() {
        // Independent oracle at 40-digit precision:
        //   max over t of 0.9t + 0.1(1-t) - 0.9^t 0.1^(1-t)
        // equals 0.2064057034561277 at t = 0.58812674263357832.
        let res = ch_divergence(&[0.9], &[0.1], &[1.0]).unwrap();
        assert!((res.value - 0.206_405_703_456_127_7).abs() < 1e-12);
        assert!((res.argmax_t - 0.588_126_742_633_578_32).abs() < 1e-7);

        // Dense in-test scan as a second, fully independent cross-check.
        let mut scan_best = f64::NEG_INFINITY;
        for i in 0..=1_000_000u32 {
            let t = f64::from(i) / 1e6;
            let v = 0.9 * t + 0.1 * (1.0 - t) - (t * 0.9f64.ln() + (1.0 - t) * 0.1f64.ln()).exp();
            scan_best = scan_best.max(v);
        }
        assert!((res.value - scan_best).abs() < 1e-9);
        assert!(res.value >= scan_best - 1e-12);
    }

    #[test]
    fn exact_zero_and_one_entries_stay_finite() {
        let res = ch_divergence(&[0.0], &[1.0], &[1.0]).unwrap();
        assert!(res.value.is_finite());
        // sup over t of (1-t) - 0^t 1^(1-t) approaches 1 near t = 0 but is 0
        // at t = 0 itself; the scan lands near the supremum.
        assert!(res.value > 0.998 && res.value <= 1.0);
    }

    #[test]
    fn mismatched_lengths_are_rejected() {
        assert!(matches!(
            ch_divergence(&[0.5, 0.5], &[0.5], &[1.0]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            ch_divergence(&[0.5], &[0.5], &[0.5, 0.5]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn symmetric_two_community_model_peaks_at_half() {
        // Two extended communities whose columns are mirror images under a
        // uniform prior: the objective is symmetric in t <-> 1-t.
        let model = build_extended_sbm_default(2, 2, 1, 0.9, 0.1, 0.5, &PriorSpec::Uniform).unwrap();
        let col0 = model.u_column(UVariant::Mean, 0);
        let col1 = model.u_column(UVariant::Mean, 1);
        let res = ch_divergence(&col0, &col1, model.prior()).unwrap();
        assert!(res.value > 0.0);
        assert!((res.argmax_t - 0.5).abs() < 1e-6, "argmax {}", res.argmax_t);
    }

    #[test]
    fn failure_bound_decreases_with_more_nodes() {
        let model = build_extended_sbm_default(2, 2, 1, 0.9, 0.1, 0.5, &PriorSpec::Uniform).unwrap();
        let b5 = map_failure_bound(&model, 5, UVariant::Mean).unwrap();
        let b10 = map_failure_bound(&model, 10, UVariant::Mean).unwrap();
        assert!(b10.raw < b5.raw);
        assert!(b5.clamped <= 1.0 && b10.clamped >= 0.0);
    }

    #[test]
    fn single_extended_community_gives_zero_bound() {
        let model = build_extended_sbm_default(1, 2, 1, 0.9, 0.1, 0.5, &PriorSpec::Uniform).unwrap();
        assert_eq!(model.k_nu(), 1);
        let b = map_failure_bound(&model, 10, UVariant::Mean).unwrap();
        assert_eq!(b.raw, 0.0);
        assert!(b.exponents.is_empty());
    }

    #[test]
    fn equal_connection_rates_saturate_the_bound() {
        // p = q makes every connectivity entry identical, so every pair's
        // divergence is 0 and each pair contributes a full unit term.
        let model = build_extended_sbm_default(2, 2, 1, 0.4, 0.4, 0.5, &PriorSpec::Uniform).unwrap();
        let b = map_failure_bound(&model, 50, UVariant::Mean).unwrap();
        assert!((b.raw - 1.0).abs() < 1e-9, "raw {}", b.raw);
        assert!(b.clamped <= 1.0 && (b.clamped - 1.0).abs() < 1e-9);
    }

    #[test]
    fn report_carries_all_three_variants_and_echo() {
        let model = build_extended_sbm_default(2, 4, 2, 0.6, 0.05, 0.5, &PriorSpec::Uniform).unwrap();
        let report = map_failure_report(&model, 20).unwrap();
        assert_eq!(report.method, BoundMethod::ChUnion);
        let pairs = model.k_nu() * (model.k_nu() - 1) / 2;
        assert_eq!(report.per_pair_exponents.len(), pairs);
        for b in [
            report.bound_mean,
            report.bound_lower,
            report.bound_upper,
        ] {
            assert!((0.0..=1.0).contains(&b));
        }
        assert_eq!(report.params_echo["l"], json!(20));
        assert_eq!(report.params_echo["coverage"], json!(4));
        // The report is JSON-serializable end to end.
        let text = serde_json::to_string(&report).unwrap();
        assert!(text.contains("per_pair_exponents"));
    }
}
