//! Spectral baseline: normalized-adjacency embedding, k-means clustering,
//! and likelihood-greedy mapping of clusters onto extended communities.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use super::map::{adjacency_flags, LogModel};
use super::ProfileEstimate;
use crate::error::{Error, Result};
use crate::extended::{BinarizedGraph, ExtendedSbm};
use crate::rng::{derive_seed, stream_rng};

const TAG_KMEANS: u64 = 0x4b4d4e53;

/// Tuning knobs for the k-means stage. The defaults match the documented
/// baseline contract (fixed seed, k-means++ initialization, 100 restarts,
/// 300-iteration cap); tests and sweeps may dial the effort down.
#[derive(Debug, Clone, Copy)]
pub struct SpectralConfig {
    /// Independent k-means restarts; the lowest within-cluster sum of
    /// squares wins, earliest restart on ties.
    pub restarts: u32,
    /// Lloyd-iteration cap per restart.
    pub max_iters: u32,
    /// Master seed for the k-means++ draws.
    pub seed: u64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig {
            restarts: 100,
            max_iters: 300,
            seed: 0x5045_4354,
        }
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

/// Nearest centroid by squared distance; strict comparison keeps the
/// lowest-indexed centroid on ties.
fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for (c, centroid) in centroids.iter().enumerate() {
        let d = squared_distance(point, centroid);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

/// k-means++ initial centroids: first uniform, later ones proportional to
/// the squared distance from the chosen set; if every point already
/// coincides with a centroid, fall back to the lowest-indexed unused point.
fn seed_centroids<R: Rng>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen: Vec<usize> = vec![rng.random_range(0..n)];
    let mut dist: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &points[chosen[0]]))
        .collect();
    while chosen.len() < k {
        let total: f64 = dist.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in dist.iter().enumerate() {
                target -= d;
                if target <= 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            (0..n)
                .find(|i| !chosen.contains(i))
                .unwrap_or(0)
        };
        chosen.push(next);
        for (i, d) in dist.iter_mut().enumerate() {
            let nd = squared_distance(&points[i], &points[next]);
            if nd < *d {
                *d = nd;
            }
        }
    }
    chosen.into_iter().map(|i| points[i].clone()).collect()
}

struct KMeansOutcome {
    assignment: Vec<usize>,
    wcss: f64,
    converged: bool,
}

fn lloyd(points: &[Vec<f64>], k: usize, max_iters: u32, mut centroids: Vec<Vec<f64>>) -> KMeansOutcome {
    let n = points.len();
    let dim = points[0].len();
    let mut assignment: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
    let mut converged = false;
    for _ in 0..max_iters {
        // Means of the current clusters.
        let mut sums = vec![vec![0.0f64; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, &c) in assignment.iter().enumerate() {
            counts[c] += 1;
            for (s, &x) in sums[c].iter_mut().zip(&points[i]) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for s in &mut sums[c] {
                    *s /= counts[c] as f64;
                }
                centroids[c] = sums[c].clone();
            } else {
                // Re-seed an emptied cluster at the point farthest from its
                // assigned centroid (lowest index on ties).
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = squared_distance(&points[a], &centroids[assignment[a]]);
                        let db = squared_distance(&points[b], &centroids[assignment[b]]);
                        da.partial_cmp(&db).unwrap().then(b.cmp(&a))
                    })
                    .unwrap();
                centroids[c] = points[far].clone();
            }
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
        if next == assignment {
            converged = true;
            break;
        }
        assignment = next;
    }
    let wcss = points
        .iter()
        .zip(&assignment)
        .map(|(p, &c)| squared_distance(p, &centroids[c]))
        .sum();
    KMeansOutcome {
        assignment,
        wcss,
        converged,
    }
}

/// Embedding rows: top-`k` eigenvectors (by eigenvalue, descending) of the
/// symmetrically normalized adjacency; zero-degree rows normalize to zero.
fn spectral_embedding(adj: &[bool], l: usize, k: usize) -> Vec<Vec<f64>> {
    let mut inv_sqrt_deg = vec![0.0f64; l];
    for i in 0..l {
        let deg = (0..l).filter(|&j| adj[i * l + j]).count();
        if deg > 0 {
            inv_sqrt_deg[i] = 1.0 / (deg as f64).sqrt();
        }
    }
    let mut normalized = DMatrix::<f64>::zeros(l, l);
    for i in 0..l {
        for j in 0..l {
            if adj[i * l + j] {
                normalized[(i, j)] = inv_sqrt_deg[i] * inv_sqrt_deg[j];
            }
        }
    }
    let eigen = SymmetricEigen::new(normalized);
    let mut order: Vec<usize> = (0..l).collect();
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[b]
            .partial_cmp(&eigen.eigenvalues[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    (0..l)
        .map(|i| order[..k].iter().map(|&c| eigen.eigenvectors[(i, c)]).collect())
        .collect()
}

/// Greedy cluster-to-community mapping: repeatedly fix the (cluster,
/// community) pair whose tentative assignment adds the most log-posterior
/// over the already-mapped nodes, each community used at most once. Ties
/// resolve to the lowest cluster, then the lowest community.
fn greedy_cluster_mapping(
    log_model: &LogModel,
    adj: &[bool],
    l: usize,
    clusters: &[usize],
    k: usize,
) -> Vec<usize> {
    let mut mapping: Vec<Option<usize>> = vec![None; k];
    let mut used = vec![false; k];
    let members: Vec<Vec<usize>> = (0..k)
        .map(|c| (0..l).filter(|&i| clusters[i] == c).collect())
        .collect();

    for _round in 0..k {
        let mut best: Option<(f64, usize, usize)> = None;
        for c in 0..k {
            if mapping[c].is_some() {
                continue;
            }
            for e in 0..k {
                if used[e] {
                    continue;
                }
                // Gain of labeling cluster c with community e: prior terms
                // for its members plus edge terms toward every node that is
                // already labeled, plus edge terms inside the cluster.
                let mut gain = 0.0;
                for (a, &i) in members[c].iter().enumerate() {
                    gain += log_model.log_prior(e);
                    for &j in &members[c][a + 1..] {
                        gain += log_model.edge_term(e, e, adj[i * l + j]);
                    }
                    for (other, other_map) in mapping.iter().enumerate() {
                        if let Some(f) = other_map {
                            for &j in &members[other] {
                                gain += log_model.edge_term(e, *f, adj[i * l + j]);
                            }
                        }
                    }
                }
                let better = match best {
                    None => true,
                    Some((g, _, _)) => gain > g,
                };
                if better {
                    best = Some((gain, c, e));
                }
            }
        }
        let (_, c, e) = best.expect("an unmapped cluster remains");
        mapping[c] = Some(e);
        used[e] = true;
    }
    mapping.into_iter().map(|m| m.unwrap()).collect()
}

/// Spectral baseline with explicit k-means effort knobs.
pub fn spectral_baseline_with_config(
    binarized: &BinarizedGraph,
    model: &ExtendedSbm,
    config: &SpectralConfig,
) -> Result<ProfileEstimate> {
    let l = binarized.l();
    let k = model.k_nu();
    if l < k {
        return Err(Error::Domain(format!(
            "spectral baseline needs at least {k} coarse nodes, got {l}"
        )));
    }
    if config.restarts == 0 {
        return Err(Error::Domain("at least one k-means restart required".into()));
    }
    let adj = adjacency_flags(binarized);
    let points = spectral_embedding(&adj, l, k);

    let mut best: Option<KMeansOutcome> = None;
    for restart in 0..config.restarts {
        let mut rng = stream_rng(derive_seed(config.seed, TAG_KMEANS, u64::from(restart)), 0);
        let centroids = seed_centroids(&points, k, &mut rng);
        let outcome = lloyd(&points, k, config.max_iters, centroids);
        let better = match &best {
            None => true,
            Some(b) => outcome.wcss < b.wcss,
        };
        if better {
            best = Some(outcome);
        }
    }
    let best = best.expect("at least one restart");

    let log_model = LogModel::new(model);
    let mapping = greedy_cluster_mapping(&log_model, &adj, l, &best.assignment, k);
    let assignments: Vec<usize> = best.assignment.iter().map(|&c| mapping[c]).collect();
    let score = super::map::score_labeling(binarized, model, &assignments)?;
    Ok(ProfileEstimate {
        assignments,
        score,
        converged: best.converged,
    })
}

/// Spectral baseline at the default effort (fixed seed, k-means++
/// initialization, 100 restarts, 300-iteration cap): embeds the coarse
/// nodes by the top-`K_nu` eigenvectors of the normalized adjacency,
/// clusters the rows with k-means, then maps clusters to extended
/// communities by greedy log-posterior maximization.
///
/// Requires `L >= K_nu`. The returned `converged` flag records whether the
/// winning k-means restart stabilized within the iteration cap; degenerate
/// inputs (for example an empty graph) still yield a valid labeling.
pub fn spectral_baseline(
    binarized: &BinarizedGraph,
    model: &ExtendedSbm,
) -> Result<ProfileEstimate> {
    spectral_baseline_with_config(binarized, model, &SpectralConfig::default())
}
