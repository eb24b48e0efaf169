//! Fine-graph generation for the symmetric stochastic block model with
//! scaling-aware edge probabilities.
//!
//! Nodes are assigned to communities independently and uniformly; each
//! unordered node pair carries an edge with probability `p = alpha * rho`
//! when the endpoints share a community and `q = beta * rho` otherwise.
//! Every random quantity is derived from a caller-supplied seed through
//! per-pair counter streams, so full and support-restricted sampling agree
//! pair by pair and generation order never matters.

use bitvec::vec::BitVec;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, pair_index, stream_rng};

/// Largest node count for which a dense upper-triangle bitset is allowed.
///
/// Above this, callers must use [`sample_fine_graph_restricted`], which only
/// materializes the pairs inside the measured supports.
pub const MAX_DENSE_NODES: usize = 50_000;

/// Stream tag separating community-assignment draws from edge draws.
const TAG_ASSIGNMENT: u64 = 0x41535347;
/// Stream tag for per-pair edge indicator draws.
const TAG_EDGES: u64 = 0x45444745;

/// Parameters of the symmetric stochastic block model `SSBM(N, K, p, q)`
/// with `p = alpha * rho` and `q = beta * rho`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SsbmParams {
    n: usize,
    k_communities: u32,
    alpha: f64,
    beta: f64,
    rho: f64,
}

impl SsbmParams {
    /// Validates and constructs model parameters.
    ///
    /// Requires `N >= K >= 1`, `rho` in `(0, 1]`, finite nonnegative
    /// `alpha`, `beta` not both zero, and both `alpha * rho` and
    /// `beta * rho` in `[0, 1]`.
    pub fn new(n: usize, k_communities: u32, alpha: f64, beta: f64, rho: f64) -> Result<Self> {
        if k_communities == 0 {
            return Err(Error::InvalidParams("community count must be >= 1".into()));
        }
        if n < k_communities as usize {
            return Err(Error::InvalidParams(format!(
                "node count {n} must be at least the community count {k_communities}"
            )));
        }
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "rho must lie in (0, 1], got {rho}"
            )));
        }
        if !alpha.is_finite() || !beta.is_finite() || alpha < 0.0 || beta < 0.0 {
            return Err(Error::InvalidParams(format!(
                "alpha and beta must be finite and nonnegative, got alpha={alpha}, beta={beta}"
            )));
        }
        if alpha == 0.0 && beta == 0.0 {
            return Err(Error::InvalidParams(
                "alpha and beta must not both be zero".into(),
            ));
        }
        let p = alpha * rho;
        let q = beta * rho;
        if p > 1.0 || q > 1.0 {
            return Err(Error::InvalidParams(format!(
                "edge probabilities must lie in [0, 1], got p = alpha*rho = {p}, q = beta*rho = {q}"
            )));
        }
        Ok(Self {
            n,
            k_communities,
            alpha,
            beta,
            rho,
        })
    }

    /// Node count `N`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Community count `K`.
    pub fn k_communities(&self) -> u32 {
        self.k_communities
    }

    /// Intra-community rate constant `alpha`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Extra-community rate constant `beta`.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Scaling factor `rho`.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Intra-community edge probability `p = alpha * rho`.
    pub fn p(&self) -> f64 {
        self.alpha * self.rho
    }

    /// Extra-community edge probability `q = beta * rho`.
    pub fn q(&self) -> f64 {
        self.beta * self.rho
    }
}

/// Community membership of every node, `0`-based: `membership[u]` is the
/// community index of node `u`, in `0..K`.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct CommunityAssignment {
    membership: Vec<u32>,
    k_communities: u32,
}

impl CommunityAssignment {
    /// Wraps an explicit membership vector, checking every entry is `< K`.
    pub fn new(membership: Vec<u32>, k_communities: u32) -> Result<Self> {
        if k_communities == 0 {
            return Err(Error::InvalidParams("community count must be >= 1".into()));
        }
        if let Some(&bad) = membership.iter().find(|&&c| c >= k_communities) {
            return Err(Error::InvalidParams(format!(
                "membership entry {bad} out of range for {k_communities} communities"
            )));
        }
        Ok(Self {
            membership,
            k_communities,
        })
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.membership.len()
    }

    /// True when there are no nodes.
    pub fn is_empty(&self) -> bool {
        self.membership.is_empty()
    }

    /// Community count `K`.
    pub fn k_communities(&self) -> u32 {
        self.k_communities
    }

    /// Community index of node `u`.
    pub fn community(&self, u: usize) -> u32 {
        self.membership[u]
    }

    /// The raw membership vector.
    pub fn as_slice(&self) -> &[u32] {
        &self.membership
    }

    /// Node indices grouped by community, each group ascending.
    pub fn members_by_community(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.k_communities as usize];
        for (u, &c) in self.membership.iter().enumerate() {
            groups[c as usize].push(u);
        }
        groups
    }
}

/// Samples a community assignment with each node independent and uniform
/// over the `K` communities. Deterministic given the seed.
pub fn sample_assignment(params: &SsbmParams, seed: u64) -> CommunityAssignment {
    let mut rng = stream_rng(derive_seed(seed, TAG_ASSIGNMENT, 0), 0);
    let k = params.k_communities;
    let membership = (0..params.n).map(|_| rng.random_range(0..k)).collect();
    CommunityAssignment {
        membership,
        k_communities: k,
    }
}

/// Storage for the symmetric zero-diagonal adjacency structure.
#[derive(Debug, Clone)]
enum EdgeStore {
    /// Upper-triangle bitset over all `N (N - 1) / 2` pairs.
    Dense { bits: BitVec },
    /// Upper-triangle bitset over the pairs internal to a node subset;
    /// pairs with an endpoint outside the subset are absent (treated as
    /// non-edges).
    SupportLocal {
        /// Sorted global node ids present in the restriction.
        nodes: Vec<usize>,
        bits: BitVec,
    },
}

/// A sampled fine graph: symmetric binary adjacency with zero diagonal,
/// plus the community assignment that generated it.
#[derive(Debug, Clone)]
pub struct FineGraph {
    n: usize,
    edges: EdgeStore,
    assignment: CommunityAssignment,
}

impl FineGraph {
    /// Node count `N` of the underlying model (also for restricted graphs).
    pub fn n(&self) -> usize {
        self.n
    }

    /// The generating community assignment.
    pub fn assignment(&self) -> &CommunityAssignment {
        &self.assignment
    }

    /// Edge indicator for the unordered pair `{u, v}`.
    ///
    /// The diagonal is always zero. On a restricted graph, any pair with an
    /// endpoint outside the sampled support reports `false`.
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        assert!(u < self.n && v < self.n, "node index out of range");
        if u == v {
            return false;
        }
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        match &self.edges {
            EdgeStore::Dense { bits } => bits[pair_index(self.n, a, b) as usize],
            EdgeStore::SupportLocal { nodes, bits } => {
                let (Ok(ia), Ok(ib)) = (nodes.binary_search(&a), nodes.binary_search(&b)) else {
                    return false;
                };
                bits[pair_index(nodes.len(), ia, ib) as usize]
            }
        }
    }

    /// Total number of edges stored.
    pub fn edge_count(&self) -> usize {
        match &self.edges {
            EdgeStore::Dense { bits } | EdgeStore::SupportLocal { bits, .. } => bits.count_ones(),
        }
    }

    /// Iterates the stored edges as sorted `(u, v)` pairs with `u < v`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        match &self.edges {
            EdgeStore::Dense { bits } => {
                for u in 0..self.n {
                    for v in (u + 1)..self.n {
                        if bits[pair_index(self.n, u, v) as usize] {
                            out.push((u, v));
                        }
                    }
                }
            }
            EdgeStore::SupportLocal { nodes, bits } => {
                let s = nodes.len();
                for i in 0..s {
                    for j in (i + 1)..s {
                        if bits[pair_index(s, i, j) as usize] {
                            out.push((nodes[i], nodes[j]));
                        }
                    }
                }
            }
        }
        out
    }

    /// Writes the graph as an edge-list text file: one `u v` line per edge,
    /// `0`-based, sorted ascending.
    pub fn write_edge_list<W: std::io::Write>(&self, mut writer: W) -> std::io::Result<()> {
        for (u, v) in self.edges() {
            writeln!(writer, "{u} {v}")?;
        }
        Ok(())
    }
}

/// Draws the edge indicator for global pair `(u, v)`, `u < v`, from its own
/// counter stream. The stream index depends only on `(N, u, v)` and the
/// seed, never on which other pairs are sampled.
fn draw_edge(
    edge_seed: u64,
    n: usize,
    u: usize,
    v: usize,
    assignment: &CommunityAssignment,
    p: f64,
    q: f64,
) -> bool {
    let prob = if assignment.community(u) == assignment.community(v) {
        p
    } else {
        q
    };
    let mut rng = stream_rng(edge_seed, pair_index(n, u, v));
    rng.random::<f64>() < prob
}

/// Samples a full fine graph: every unordered pair carries an independent
/// Bernoulli edge (`p` intra-community, `q` extra-community).
///
/// Returns [`Error::SizeCap`] when `N` exceeds [`MAX_DENSE_NODES`]; use
/// [`sample_fine_graph_restricted`] for large models where only measured
/// nodes matter.
pub fn sample_fine_graph(
    params: &SsbmParams,
    assignment: &CommunityAssignment,
    seed: u64,
) -> Result<FineGraph> {
    if assignment.len() != params.n() {
        return Err(Error::LengthMismatch {
            context: "assignment length vs node count",
            left: assignment.len(),
            right: params.n(),
        });
    }
    let n = params.n();
    if n > MAX_DENSE_NODES {
        return Err(Error::SizeCap {
            n,
            max_n: MAX_DENSE_NODES,
        });
    }
    let (p, q) = (params.p(), params.q());
    let edge_seed = derive_seed(seed, TAG_EDGES, 0);
    let mut bits = BitVec::repeat(false, n * (n - 1) / 2);
    for u in 0..n {
        for v in (u + 1)..n {
            if draw_edge(edge_seed, n, u, v, assignment, p, q) {
                bits.set(pair_index(n, u, v) as usize, true);
            }
        }
    }
    Ok(FineGraph {
        n,
        edges: EdgeStore::Dense { bits },
        assignment: assignment.clone(),
    })
}

/// Samples only the pairs internal to `support`, using exactly the same
/// per-pair streams as [`sample_fine_graph`]: for any support pair, the two
/// functions produce the identical edge indicator under the same seed.
///
/// Duplicate support entries are collapsed.
pub fn sample_fine_graph_restricted(
    params: &SsbmParams,
    assignment: &CommunityAssignment,
    support: &[usize],
    seed: u64,
) -> Result<FineGraph> {
    if assignment.len() != params.n() {
        return Err(Error::LengthMismatch {
            context: "assignment length vs node count",
            left: assignment.len(),
            right: params.n(),
        });
    }
    let n = params.n();
    if let Some(&bad) = support.iter().find(|&&u| u >= n) {
        return Err(Error::InvalidParams(format!(
            "support node {bad} out of range for {n} nodes"
        )));
    }
    let mut nodes: Vec<usize> = support.to_vec();
    nodes.sort_unstable();
    nodes.dedup();
    let s = nodes.len();
    let (p, q) = (params.p(), params.q());
    let edge_seed = derive_seed(seed, TAG_EDGES, 0);
    let mut bits = BitVec::repeat(false, s.saturating_mul(s.saturating_sub(1)) / 2);
    for i in 0..s {
        for j in (i + 1)..s {
            if draw_edge(edge_seed, n, nodes[i], nodes[j], assignment, p, q) {
                bits.set(pair_index(s, i, j) as usize, true);
            }
        }
    }
    Ok(FineGraph {
        n,
        edges: EdgeStore::SupportLocal { nodes, bits },
        assignment: assignment.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize, k: u32, p: f64, q: f64) -> SsbmParams {
        // Encode exact edge probabilities via rho = 1.
        SsbmParams::new(n, k, p, q, 1.0).unwrap()
    }

    #[test]
    fn params_validation_rejects_bad_inputs() {
        assert!(SsbmParams::new(10, 0, 1.0, 1.0, 0.5).is_err());
        assert!(SsbmParams::new(3, 5, 1.0, 1.0, 0.5).is_err());
        assert!(SsbmParams::new(10, 2, 1.0, 1.0, 0.0).is_err());
        assert!(SsbmParams::new(10, 2, 1.0, 1.0, 1.5).is_err());
        assert!(SsbmParams::new(10, 2, -1.0, 1.0, 0.5).is_err());
        assert!(SsbmParams::new(10, 2, 0.0, 0.0, 0.5).is_err());
        assert!(SsbmParams::new(10, 2, 3.0, 1.0, 0.5).is_err(), "p > 1");
        let ok = SsbmParams::new(10, 2, 1.6, 0.4, 0.5).unwrap();
        assert_eq!(ok.p(), 0.8);
        assert_eq!(ok.q(), 0.2);
    }

    #[test]
    fn single_community_assignment_is_all_zero() {
        let params = params(37, 1, 0.5, 0.5);
        let assignment = sample_assignment(&params, 7);
        assert!(assignment.as_slice().iter().all(|&c| c == 0));
    }

    #[test]
    fn assignment_is_deterministic_and_seed_sensitive() {
        let params = params(500, 4, 0.5, 0.1);
        let a = sample_assignment(&params, 42);
        let b = sample_assignment(&params, 42);
        let c = sample_assignment(&params, 43);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn assignment_community_sizes_concentrate() {
        // Each community size is Binomial(N, 1/K); require all sizes within
        // four standard deviations of N/K.
        let n = 100_000usize;
        let k = 5u32;
        let params = params(n, k, 0.001, 0.001);
        let assignment = sample_assignment(&params, 2024);
        let sizes: Vec<usize> = assignment
            .members_by_community()
            .iter()
            .map(Vec::len)
            .collect();
        let mean = n as f64 / k as f64;
        let sd = (n as f64 * (1.0 / k as f64) * (1.0 - 1.0 / k as f64)).sqrt();
        for (c, &size) in sizes.iter().enumerate() {
            assert!(
                (size as f64 - mean).abs() <= 4.0 * sd,
                "community {c} size {size} vs mean {mean} (sd {sd})"
            );
        }
        assert_eq!(sizes.iter().sum::<usize>(), n);
    }

    #[test]
    fn extreme_probabilities_give_empty_and_clique_graphs() {
        // alpha = 0 with K = 1 makes every pair intra with p = 0: the graph
        // is empty regardless of beta.
        let params_zero_intra = SsbmParams::new(30, 1, 0.0, 0.5, 1.0).unwrap();
        let assignment = sample_assignment(&params_zero_intra, 1);
        let g = sample_fine_graph(&params_zero_intra, &assignment, 9).unwrap();
        assert_eq!(g.edge_count(), 0);

        // p = 1, q = 0: disjoint union of community cliques.
        let params_cliques = SsbmParams::new(24, 3, 1.0, 0.0, 1.0).unwrap();
        let assignment = sample_assignment(&params_cliques, 5);
        let g = sample_fine_graph(&params_cliques, &assignment, 11).unwrap();
        for u in 0..24 {
            for v in (u + 1)..24 {
                let same = assignment.community(u) == assignment.community(v);
                assert_eq!(g.has_edge(u, v), same, "pair ({u}, {v})");
            }
        }
    }

    #[test]
    fn empirical_densities_match_model_probabilities() {
        let n = 2000usize;
        let params = params(n, 4, 0.5, 0.1);
        let assignment = sample_assignment(&params, 100);
        let g = sample_fine_graph(&params, &assignment, 200).unwrap();
        let (mut intra_pairs, mut intra_edges) = (0u64, 0u64);
        let (mut extra_pairs, mut extra_edges) = (0u64, 0u64);
        for u in 0..n {
            for v in (u + 1)..n {
                let e = g.has_edge(u, v) as u64;
                if assignment.community(u) == assignment.community(v) {
                    intra_pairs += 1;
                    intra_edges += e;
                } else {
                    extra_pairs += 1;
                    extra_edges += e;
                }
            }
        }
        let check = |edges: u64, pairs: u64, prob: f64, label: &str| {
            let rate = edges as f64 / pairs as f64;
            let sd = (prob * (1.0 - prob) / pairs as f64).sqrt();
            assert!(
                (rate - prob).abs() <= 3.0 * sd,
                "{label}: rate {rate} vs {prob} (sd {sd}, pairs {pairs})"
            );
        };
        check(intra_edges, intra_pairs, 0.5, "intra");
        check(extra_edges, extra_pairs, 0.1, "extra");
    }

    #[test]
    fn edge_law_passes_chi_square_on_six_node_instance() {
        // Fixed assignment over six nodes; 10^4 trials per unordered pair.
        // Each pair's edge count is Binomial(T, p or q); chi-square with one
        // degree of freedom, significance 1e-3 (critical value 10.828).
        let params = params(6, 2, 0.65, 0.2);
        let assignment = CommunityAssignment::new(vec![0, 0, 0, 1, 1, 1], 2).unwrap();
        let trials = 10_000u64;
        let mut edge_counts = [[0u64; 6]; 6];
        for t in 0..trials {
            let g = sample_fine_graph(&params, &assignment, derive_seed(77, 1, t)).unwrap();
            for u in 0..6 {
                for v in (u + 1)..6 {
                    edge_counts[u][v] += g.has_edge(u, v) as u64;
                }
            }
        }
        for u in 0..6 {
            for v in (u + 1)..6 {
                let prob = if assignment.community(u) == assignment.community(v) {
                    0.65
                } else {
                    0.2
                };
                let observed = edge_counts[u][v] as f64;
                let expected = trials as f64 * prob;
                let expected_absent = trials as f64 * (1.0 - prob);
                let chi2 = (observed - expected).powi(2) / expected
                    + ((trials as f64 - observed) - expected_absent).powi(2) / expected_absent;
                assert!(
                    chi2 <= 10.828,
                    "pair ({u}, {v}): chi-square {chi2} exceeds 1e-3 critical value"
                );
            }
        }
    }

    #[test]
    fn disjoint_pairs_are_empirically_uncorrelated() {
        let params = params(6, 2, 0.5, 0.5);
        let assignment = CommunityAssignment::new(vec![0, 0, 1, 1, 0, 1], 2).unwrap();
        let trials = 20_000usize;
        let (mut x_sum, mut y_sum, mut xy_sum) = (0f64, 0f64, 0f64);
        for t in 0..trials {
            let g = sample_fine_graph(&params, &assignment, derive_seed(31, 2, t as u64)).unwrap();
            let x = g.has_edge(0, 1) as u64 as f64;
            let y = g.has_edge(2, 3) as u64 as f64;
            x_sum += x;
            y_sum += y;
            xy_sum += x * y;
        }
        let t = trials as f64;
        let (mx, my) = (x_sum / t, y_sum / t);
        let cov = xy_sum / t - mx * my;
        let corr = cov / ((mx * (1.0 - mx)).sqrt() * (my * (1.0 - my)).sqrt());
        assert!(
            corr.abs() <= 4.0 / t.sqrt(),
            "disjoint-pair correlation {corr} outside Monte Carlo noise"
        );
    }

    #[test]
    fn restricted_sampling_matches_full_sampling_pair_by_pair() {
        let n = 100usize;
        let params = params(n, 3, 0.4, 0.15);
        let assignment = sample_assignment(&params, 8);
        let support: Vec<usize> = vec![3, 7, 12, 13, 20, 41, 42, 58, 77, 99];
        let full = sample_fine_graph(&params, &assignment, 555).unwrap();
        let restricted =
            sample_fine_graph_restricted(&params, &assignment, &support, 555).unwrap();
        for (i, &u) in support.iter().enumerate() {
            for &v in &support[i + 1..] {
                assert_eq!(
                    restricted.has_edge(u, v),
                    full.has_edge(u, v),
                    "pair ({u}, {v}) differs between restricted and full sampling"
                );
            }
        }
        // Pairs leaving the support are reported absent.
        assert!(!restricted.has_edge(0, 3));
    }

    #[test]
    fn restricted_to_all_nodes_equals_full_graph() {
        let n = 40usize;
        let params = params(n, 2, 0.5, 0.2);
        let assignment = sample_assignment(&params, 3);
        let all: Vec<usize> = (0..n).collect();
        let full = sample_fine_graph(&params, &assignment, 17).unwrap();
        let restricted = sample_fine_graph_restricted(&params, &assignment, &all, 17).unwrap();
        assert_eq!(full.edges(), restricted.edges());
    }

    #[test]
    fn restricted_to_empty_support_is_empty() {
        let params = params(40, 2, 0.5, 0.2);
        let assignment = sample_assignment(&params, 3);
        let g = sample_fine_graph_restricted(&params, &assignment, &[], 17).unwrap();
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn dense_sampling_refuses_oversized_graphs() {
        let n = MAX_DENSE_NODES + 1;
        let params = SsbmParams::new(n, 2, 0.2, 0.1, 0.001).unwrap();
        let assignment = CommunityAssignment::new(vec![0; n], 2).unwrap();
        match sample_fine_graph(&params, &assignment, 1) {
            Err(Error::SizeCap { n: got, max_n }) => {
                assert_eq!(got, n);
                assert_eq!(max_n, MAX_DENSE_NODES);
            }
            other => panic!("expected SizeCap, got {other:?}"),
        }
        // The restricted path accepts the same model.
        let g = sample_fine_graph_restricted(&params, &assignment, &[0, 1, 2], 1).unwrap();
        assert_eq!(g.n(), n);
    }

    #[test]
    fn edge_list_export_is_sorted_and_exact() {
        let params = SsbmParams::new(4, 1, 1.0, 0.0, 1.0).unwrap();
        let assignment = CommunityAssignment::new(vec![0, 0, 0, 0], 1).unwrap();
        let g = sample_fine_graph(&params, &assignment, 0).unwrap();
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n");
    }

    #[test]
    fn graph_is_symmetric_with_zero_diagonal() {
        let params = params(25, 3, 0.5, 0.2);
        let assignment = sample_assignment(&params, 12);
        let g = sample_fine_graph(&params, &assignment, 60).unwrap();
        for u in 0..25 {
            assert!(!g.has_edge(u, u));
            for v in 0..25 {
                assert_eq!(g.has_edge(u, v), g.has_edge(v, u));
            }
        }
    }
}
