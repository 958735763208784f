//! Early-terminated trust propagation ranking accounts by closeness to a
//! set of suspicious seeds.
//!
//! Trust starts evenly on the seeds and spreads over the undirected graph:
//! each node passes `T(u) / deg(u)` to every neighbor. After `⌈log2 N⌉`
//! rounds the score is `T(v) / deg(v)`, so a high score means the account
//! sits in the seeds' region. Nodes without neighbors keep their trust.

use crate::embedding::{EmbeddingSpace, Metric, SpaceKind};
use crate::error::{Error, Result};
use crate::graph::CommGraph;

#[derive(Debug, Clone, PartialEq)]
pub struct TrustVector {
    pub trust: Vec<f64>,
    pub iterations: usize,
    pub seeds: Vec<usize>,
}

pub fn default_iterations(n: usize) -> usize {
    if n <= 1 {
        1
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

pub fn initial_trust(n: usize, seeds: &[usize]) -> Vec<f64> {
    let mut t = vec![0.0; n];
    let share = 1.0 / seeds.len() as f64;
    for &s in seeds {
        t[s] += share;
    }
    t
}

/// One propagation round over distinct neighbors.
pub fn propagate(graph: &CommGraph, trust: &[f64]) -> Vec<f64> {
    let mut next = vec![0.0; trust.len()];
    for (u, &t) in trust.iter().enumerate() {
        let neighbors = graph.neighbors(u);
        if neighbors.is_empty() {
            next[u] += t;
            continue;
        }
        let share = t / neighbors.len() as f64;
        for &(v, _) in neighbors {
            next[v] += share;
        }
    }
    next
}

/// Seeds are deduplicated; every seed must be a node of `graph`.
pub fn sybil_rank(graph: &CommGraph, seeds: &[usize], iterations: Option<usize>) -> Result<TrustVector> {
    let g;
    let graph = if graph.is_undirected() {
        graph
    } else {
        g = graph.symmetrize();
        &g
    };
    let n = graph.node_count();
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("trust propagation needs at least one seed".into()));
    }
    if let Some(&bad) = seeds.iter().find(|&&s| s >= n) {
        return Err(Error::UnknownAccount(format!("seed index {bad}")));
    }
    let mut seeds = seeds.to_vec();
    seeds.sort_unstable();
    seeds.dedup();
    let iterations = iterations.unwrap_or_else(|| default_iterations(n));
    let mut trust = initial_trust(n, &seeds);
    for _ in 0..iterations {
        trust = propagate(graph, &trust);
    }
    Ok(TrustVector { trust, iterations, seeds })
}

/// Degree-normalized scores.
pub fn scores(graph: &CommGraph, tv: &TrustVector) -> Vec<f64> {
    tv.trust
        .iter()
        .enumerate()
        .map(|(v, &t)| t / graph.distinct_degree(v).max(1) as f64)
        .collect()
}

/// Ranked single-column space of degree-normalized trust.
pub fn sybil_rank_space(graph: &CommGraph, seed_ids: &[&str], iterations: Option<usize>) -> Result<EmbeddingSpace> {
    let g = graph.symmetrize();
    let seeds = seed_ids
        .iter()
        .map(|id| g.index_of(id).ok_or_else(|| Error::UnknownAccount(id.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let tv = sybil_rank(&g, &seeds, iterations)?;
    EmbeddingSpace::new("sybilrank", g.ids().to_vec(), 1, scores(&g, &tv), Metric::Euclidean, SpaceKind::Ranked, 0)
}
