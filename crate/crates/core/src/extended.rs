//! Binarization of coarse graphs and the equivalent non-overlapping SBM
//! over extended communities.
//!
//! Thresholding the coarse edge counts at `k^2 (tau p + (1 - tau) q)` turns
//! the weighted coarse graph into a binary one whose edge probabilities
//! depend on the two endpoint profiles only through their inner product.
//! Indexing the profile set canonically therefore yields an ordinary
//! stochastic block model with `K_nu` labels, prior `s`, and a connectivity
//! matrix `U` of upper-tail probabilities. For coverages whose pair count
//! `k^2` exceeds the exact-evaluation cap, `U` is computed three ways —
//! normal-approximation midpoint plus certified lower/upper band edges — and
//! all downstream bounds propagate the three variants.

use std::collections::BTreeMap;

use bitvec::vec::BitVec;

use crate::coarsen::{profile_set, validate_prior, CoarseGraph};
use crate::dist::{pb_tail, PoissonBinomialSpec, TailResult, DEFAULT_EXACT_CAP};
use crate::error::{Error, Result};

/// Which edge of the connectivity band to propagate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum UVariant {
    /// Midpoint estimate (exact value on the exact path).
    Mean,
    /// Certified lower edge.
    Lower,
    /// Certified upper edge.
    Upper,
}

impl UVariant {
    /// All three variants, in reporting order.
    pub const ALL: [UVariant; 3] = [UVariant::Mean, UVariant::Lower, UVariant::Upper];
}

/// How the extended-community prior is specified.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum PriorSpec {
    /// Uniform over the canonical profile set.
    Uniform,
    /// Explicit probability vector over the canonical profile set.
    Custom(Vec<f64>),
}

/// A thresholded coarse graph: symmetric binary adjacency over the `L`
/// coarse nodes, zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarizedGraph {
    l: usize,
    adj: BitVec,
    tau: f64,
    threshold_value: f64,
}

impl BinarizedGraph {
    /// Builds a binary graph directly from an explicit undirected edge
    /// list, for synthetic inputs that never went through thresholding.
    /// Self-loops are rejected; duplicate edges are idempotent. The
    /// threshold metadata is zeroed.
    pub fn from_edges(l: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if l == 0 {
            return Err(Error::Domain("graph needs at least one node".into()));
        }
        let mut adj = BitVec::repeat(false, l * l);
        for &(i, j) in edges {
            if i >= l || j >= l {
                return Err(Error::Domain(format!(
                    "edge ({i}, {j}) out of range for {l} nodes"
                )));
            }
            if i == j {
                return Err(Error::Domain(format!("self-loop at node {i}")));
            }
            adj.set(i * l + j, true);
            adj.set(j * l + i, true);
        }
        Ok(BinarizedGraph {
            l,
            adj,
            tau: 0.0,
            threshold_value: 0.0,
        })
    }

    /// Coarse node count `L`.
    pub fn l(&self) -> usize {
        self.l
    }

    /// Threshold parameter `tau`.
    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// The applied threshold `k^2 (tau p + (1 - tau) q)`.
    pub fn threshold_value(&self) -> f64 {
        self.threshold_value
    }

    /// Binary edge indicator between coarse nodes `i` and `j` (diagonal is
    /// always zero).
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        assert!(i < self.l && j < self.l, "coarse node index out of range");
        i != j && self.adj[i * self.l + j]
    }

    /// Number of (unordered) binary edges.
    pub fn edge_count(&self) -> usize {
        (0..self.l)
            .map(|i| (0..i).filter(|&j| self.has_edge(i, j)).count())
            .sum()
    }
}

/// Thresholds a coarse graph: edge `(i, j)` survives iff its weight is at
/// least `k^2 (tau p + (1 - tau) q)`, with equality kept.
pub fn binarize(coarse: &CoarseGraph, p: f64, q: f64, tau: f64) -> Result<BinarizedGraph> {
    for (name, value) in [("p", p), ("q", q), ("tau", tau)] {
        if !(0.0..=1.0).contains(&value) || !value.is_finite() {
            return Err(Error::Domain(format!(
                "{name} must lie in [0, 1], got {value}"
            )));
        }
    }
    let l = coarse.l();
    let k2 = (coarse.coverage() as f64).powi(2);
    let threshold_value = k2 * (tau * p + (1.0 - tau) * q);
    let mut adj = BitVec::repeat(false, l * l);
    for i in 0..l {
        for j in 0..i {
            if coarse.weight(i, j) as f64 >= threshold_value {
                adj.set(i * l + j, true);
                adj.set(j * l + i, true);
            }
        }
    }
    Ok(BinarizedGraph {
        l,
        adj,
        tau,
        threshold_value,
    })
}

/// The equivalent non-overlapping SBM over extended communities: the
/// canonical profile list, its index map, the prior `s`, and the three
/// connectivity-matrix variants.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ExtendedSbm {
    profiles: Vec<Vec<u32>>,
    #[serde(skip)]
    index: BTreeMap<Vec<u32>, usize>,
    prior: Vec<f64>,
    u_mean: Vec<f64>,
    u_lower: Vec<f64>,
    u_upper: Vec<f64>,
    coverage: u32,
    k_communities: u32,
    nu: u32,
    p: f64,
    q: f64,
    tau: f64,
    threshold_value: f64,
    /// True when `k^2` fit under the exact-evaluation cap, making the three
    /// variants coincide.
    exact_path: bool,
}

impl ExtendedSbm {
    /// Number of extended communities `K_nu`.
    pub fn k_nu(&self) -> usize {
        self.profiles.len()
    }

    /// The canonical profile list.
    pub fn profiles(&self) -> &[Vec<u32>] {
        &self.profiles
    }

    /// Index of a profile vector in the canonical list, when present.
    pub fn index_of(&self, profile: &[u32]) -> Option<usize> {
        self.index.get(profile).copied()
    }

    /// Prior `s` over extended communities.
    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    /// Coverage `k`.
    pub fn coverage(&self) -> u32 {
        self.coverage
    }

    /// Community count `K`.
    pub fn k_communities(&self) -> u32 {
        self.k_communities
    }

    /// Community-overlap bound `nu`.
    pub fn nu(&self) -> u32 {
        self.nu
    }

    /// Intra-community fine edge probability `p`.
    pub fn p(&self) -> f64 {
        self.p
    }

    /// Extra-community fine edge probability `q`.
    pub fn q(&self) -> f64 {
        self.q
    }

    /// Threshold parameter `tau`.
    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Binarization threshold `k^2 (tau p + (1 - tau) q)`.
    pub fn threshold_value(&self) -> f64 {
        self.threshold_value
    }

    /// Whether the connectivity entries came from the exact tail path.
    pub fn exact_path(&self) -> bool {
        self.exact_path
    }

    /// Connectivity entry between extended communities `i` and `j` for the
    /// requested band variant.
    pub fn u(&self, variant: UVariant, i: usize, j: usize) -> f64 {
        let m = match variant {
            UVariant::Mean => &self.u_mean,
            UVariant::Lower => &self.u_lower,
            UVariant::Upper => &self.u_upper,
        };
        m[i * self.k_nu() + j]
    }

    /// Column `j` of the requested connectivity variant.
    pub fn u_column(&self, variant: UVariant, j: usize) -> Vec<f64> {
        (0..self.k_nu()).map(|i| self.u(variant, i, j)).collect()
    }

    /// Serializes profiles, prior, and the three connectivity matrices
    /// (nested rows, full precision) as pretty JSON.
    pub fn to_json(&self) -> String {
        #[derive(serde::Serialize)]
        struct Dump<'a> {
            k_communities: u32,
            coverage: u32,
            nu: u32,
            p: f64,
            q: f64,
            tau: f64,
            threshold_value: f64,
            exact_path: bool,
            profiles: &'a [Vec<u32>],
            prior: &'a [f64],
            u_mean: Vec<&'a [f64]>,
            u_lower: Vec<&'a [f64]>,
            u_upper: Vec<&'a [f64]>,
        }
        let k_nu = self.k_nu();
        fn rows(m: &[f64], k_nu: usize) -> Vec<&[f64]> {
            (0..k_nu).map(|i| &m[i * k_nu..(i + 1) * k_nu]).collect()
        }
        let dump = Dump {
            k_communities: self.k_communities,
            coverage: self.coverage,
            nu: self.nu,
            p: self.p,
            q: self.q,
            tau: self.tau,
            threshold_value: self.threshold_value,
            exact_path: self.exact_path,
            profiles: &self.profiles,
            prior: &self.prior,
            u_mean: rows(&self.u_mean, k_nu),
            u_lower: rows(&self.u_lower, k_nu),
            u_upper: rows(&self.u_upper, k_nu),
        };
        serde_json::to_string_pretty(&dump).expect("serialization cannot fail")
    }
}

/// Builds the extended SBM for the given model and threshold parameters.
///
/// Entry `(i, j)` of each connectivity variant is the upper tail, at the
/// binarization threshold, of the coarse-weight law for a support pair with
/// profile inner product `m = a_i . a_j`: the sum of `m` Bernoulli(p) and
/// `k^2 - m` Bernoulli(q) indicators. Tails are memoized per distinct inner
/// product. `exact_cap` bounds the pair count for which the quadratic exact
/// evaluation runs; beyond it, a certified normal-approximation band is
/// used (see [`DEFAULT_EXACT_CAP`]).
pub fn build_extended_sbm(
    k_communities: u32,
    coverage: u32,
    nu: u32,
    p: f64,
    q: f64,
    tau: f64,
    prior_spec: &PriorSpec,
    exact_cap: usize,
) -> Result<ExtendedSbm> {
    for (name, value) in [("p", p), ("q", q)] {
        if !(value > 0.0 && value < 1.0) {
            return Err(Error::Domain(format!(
                "{name} must lie strictly inside (0, 1), got {value}"
            )));
        }
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::Domain(format!("tau must lie in [0, 1], got {tau}")));
    }
    let profiles = profile_set(k_communities, coverage, nu)?;
    let k_nu = profiles.len();
    let prior = match prior_spec {
        PriorSpec::Uniform => vec![1.0 / k_nu as f64; k_nu],
        PriorSpec::Custom(s) => {
            validate_prior(s, k_nu)?;
            s.clone()
        }
    };
    let index: BTreeMap<Vec<u32>, usize> = profiles
        .iter()
        .enumerate()
        .map(|(i, a)| (a.clone(), i))
        .collect();
    let k2 = (coverage as usize) * (coverage as usize);
    let threshold_value = k2 as f64 * (tau * p + (1.0 - tau) * q);

    // Memoize tails per distinct inner product.
    let mut tails: BTreeMap<u32, TailResult> = BTreeMap::new();
    let mut tail_for = |m: u32| -> Result<TailResult> {
        if let Some(t) = tails.get(&m) {
            return Ok(*t);
        }
        let spec = PoissonBinomialSpec::new(m as usize, k2, p, q)?;
        let t = pb_tail(&spec, threshold_value, exact_cap);
        tails.insert(m, t);
        Ok(t)
    };

    let mut u_mean = vec![0.0; k_nu * k_nu];
    let mut u_lower = vec![0.0; k_nu * k_nu];
    let mut u_upper = vec![0.0; k_nu * k_nu];
    for i in 0..k_nu {
        for j in 0..=i {
            let m: u32 = profiles[i]
                .iter()
                .zip(&profiles[j])
                .map(|(&a, &b)| a * b)
                .sum();
            let tail = tail_for(m)?;
            for (matrix, value) in [
                (&mut u_mean, tail.mean),
                (&mut u_lower, tail.lower),
                (&mut u_upper, tail.upper),
            ] {
                matrix[i * k_nu + j] = value;
                matrix[j * k_nu + i] = value;
            }
        }
    }
    Ok(ExtendedSbm {
        profiles,
        index,
        prior,
        u_mean,
        u_lower,
        u_upper,
        coverage,
        k_communities,
        nu,
        p,
        q,
        tau,
        threshold_value,
        exact_path: k2 <= exact_cap,
    })
}

/// Pairwise inner products of a profile list: entry `(i, j)` is
/// `a_i . a_j`, in `[0, k^2]`.
pub fn profile_inner_products(profiles: &[Vec<u32>]) -> Vec<Vec<u32>> {
    profiles
        .iter()
        .map(|a| {
            profiles
                .iter()
                .map(|b| a.iter().zip(b).map(|(&x, &y)| x * y).sum())
                .collect()
        })
        .collect()
}

/// Convenience: builds with the default exact-evaluation cap.
pub fn build_extended_sbm_default(
    k_communities: u32,
    coverage: u32,
    nu: u32,
    p: f64,
    q: f64,
    tau: f64,
    prior_spec: &PriorSpec,
) -> Result<ExtendedSbm> {
    build_extended_sbm(
        k_communities,
        coverage,
        nu,
        p,
        q,
        tau,
        prior_spec,
        DEFAULT_EXACT_CAP,
    )
}
