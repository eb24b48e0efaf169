//! Estimate-versus-truth comparison up to relabeling of the original
//! communities.
//!
//! A relabeling permutes the columns of the profile matrix, which permutes
//! the canonical profile set and hence the extended-community indices. The
//! evaluation searches every permutation of the original `K` communities
//! (not the `K_nu` extended ones) and scores the estimate against the
//! best-matching relabeled truth.

use std::collections::BTreeMap;

use itertools::Itertools;

use super::ProfileEstimate;
use crate::coarsen::ProfileMatrix;
use crate::error::{Error, Result};

/// Largest original-community count for which the `K!` permutation search
/// is attempted.
pub(crate) const MAX_PERMUTED_COMMUNITIES: usize = 8;

/// Outcome of comparing an estimated labeling against the generating
/// profile matrix.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct EvalResult {
    /// True when every coarse node matches under the best relabeling.
    pub exact_recovery: bool,
    /// Mismatched fraction of coarse nodes under the best relabeling.
    pub node_error_rate: f64,
    /// Mismatched coarse-node count under the best relabeling.
    pub errors: usize,
    /// The minimizing relabeling: community `c` is renamed
    /// `best_permutation[c]`.
    pub best_permutation: Vec<usize>,
}

/// Compares an estimate against the generating profile matrix over all
/// `K!` relabelings of the original communities (lexicographic order, first
/// minimizer kept, so an exact match reports the identity).
///
/// `profiles` must be the canonical profile list the estimate's indices
/// refer to. Errors with [`Error::TooManyCommunities`] when `K > 8`, and
/// with [`Error::Domain`] when a relabeled truth row does not appear in
/// `profiles` (inconsistent model/truth pairing).
pub fn evaluate(
    estimate: &ProfileEstimate,
    truth: &ProfileMatrix,
    profiles: &[Vec<u32>],
) -> Result<EvalResult> {
    let l = truth.l();
    if estimate.assignments.len() != l {
        return Err(Error::LengthMismatch {
            context: "estimate length vs truth rows",
            left: estimate.assignments.len(),
            right: l,
        });
    }
    let k = truth.k_communities() as usize;
    if k > MAX_PERMUTED_COMMUNITIES {
        return Err(Error::TooManyCommunities {
            got: k,
            max: MAX_PERMUTED_COMMUNITIES,
        });
    }
    let index_of: BTreeMap<&[u32], usize> = profiles
        .iter()
        .enumerate()
        .map(|(i, p)| (p.as_slice(), i))
        .collect();
    if let Some(&bad) = estimate
        .assignments
        .iter()
        .find(|&&x| x >= profiles.len())
    {
        return Err(Error::Domain(format!(
            "estimate label {bad} out of range for {} profiles",
            profiles.len()
        )));
    }

    let mut best: Option<(usize, Vec<usize>)> = None;
    for perm in (0..k).permutations(k) {
        let mut mismatches = 0usize;
        for (i, &assigned) in estimate.assignments.iter().enumerate() {
            let row = truth.row(i);
            let mut relabeled = vec![0u32; k];
            for (c, &count) in row.iter().enumerate() {
                relabeled[perm[c]] = count;
            }
            let truth_index = *index_of.get(relabeled.as_slice()).ok_or_else(|| {
                Error::Domain(format!(
                    "relabeled truth profile {relabeled:?} missing from the canonical list"
                ))
            })?;
            if truth_index != assigned {
                mismatches += 1;
            }
        }
        let better = match &best {
            None => true,
            Some((m, _)) => mismatches < *m,
        };
        if better {
            let exact = mismatches == 0;
            best = Some((mismatches, perm));
            if exact {
                break;
            }
        }
    }
    let (errors, best_permutation) = best.expect("at least the identity permutation");
    Ok(EvalResult {
        exact_recovery: errors == 0,
        node_error_rate: errors as f64 / l as f64,
        errors,
        best_permutation,
    })
}
