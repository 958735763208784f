//! Second-order biased random walks.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::CommGraph;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkConfig {
    pub walks_per_node: usize,
    pub walk_length: usize,
    /// Return parameter.
    pub p: f64,
    /// In-out parameter.
    pub q: f64,
    pub seed: u64,
    /// Scale transition weights by edge weight instead of treating every
    /// distinct neighbor alike.
    pub weighted: bool,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig { walks_per_node: 10, walk_length: 80, p: 1.0, q: 1.0, seed: 0, weighted: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkCorpus {
    pub walks: Vec<Vec<usize>>,
    pub walk_length: usize,
    pub walks_per_node: usize,
    pub p: f64,
    pub q: f64,
    pub seed: u64,
}

impl WalkCorpus {
    /// One space-separated walk of account ids per line.
    pub fn write<W: Write>(&self, mut out: W, graph: &CommGraph) -> Result<()> {
        for walk in &self.walks {
            let line: Vec<&str> = walk.iter().map(|&v| graph.id(v)).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// Normalized next-hop distribution from `current`, given the node the walk
/// came from. Unnormalized weights are `1/p` for returning to `previous`,
/// `1` for neighbors of `previous` and `1/q` otherwise.
pub fn transition_probabilities(
    graph: &CommGraph,
    previous: Option<usize>,
    current: usize,
    p: f64,
    q: f64,
    weighted: bool,
) -> Vec<(usize, f64)> {
    let mut weights = Vec::with_capacity(graph.neighbors(current).len());
    let mut total = 0.0;
    for &(next, w) in graph.neighbors(current) {
        let bias = match previous {
            None => 1.0,
            Some(prev) if next == prev => 1.0 / p,
            Some(prev) if graph.has_edge(prev, next) => 1.0,
            Some(_) => 1.0 / q,
        };
        let weight = if weighted { bias * w as f64 } else { bias };
        total += weight;
        weights.push((next, weight));
    }
    for (_, w) in weights.iter_mut() {
        *w /= total;
    }
    weights
}

fn step(graph: &CommGraph, previous: Option<usize>, current: usize, cfg: &WalkConfig, rng: &mut ChaCha8Rng) -> Option<usize> {
    let neighbors = graph.neighbors(current);
    if neighbors.is_empty() {
        return None;
    }
    if previous.is_none() && !cfg.weighted {
        return Some(neighbors[rng.random_range(0..neighbors.len())].0);
    }
    let probs = transition_probabilities(graph, previous, current, cfg.p, cfg.q, cfg.weighted);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for &(next, pr) in &probs {
        acc += pr;
        if u < acc {
            return Some(next);
        }
    }
    probs.last().map(|&(n, _)| n)
}

fn walk_from(graph: &CommGraph, root: usize, cfg: &WalkConfig, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut walk = Vec::with_capacity(cfg.walk_length);
    walk.push(root);
    let mut previous = None;
    while walk.len() < cfg.walk_length {
        let current = *walk.last().unwrap();
        match step(graph, previous, current, cfg, rng) {
            Some(next) => {
                previous = Some(current);
                walk.push(next);
            }
            None => break,
        }
    }
    walk
}

/// Sample `walks_per_node` walks from every node. Each root draws from its
/// own ChaCha stream, so output does not depend on thread count. Walks are
/// ordered round by round, roots ascending within a round.
pub fn sample_walks(graph: &CommGraph, cfg: &WalkConfig) -> Result<WalkCorpus> {
    if cfg.walks_per_node == 0 || cfg.walk_length == 0 {
        return Err(Error::Config("walks_per_node and walk_length must be at least 1".into()));
    }
    if !(cfg.p > 0.0 && cfg.q > 0.0) {
        return Err(Error::Config(format!("p and q must be positive (p={}, q={})", cfg.p, cfg.q)));
    }
    let n = graph.node_count();
    let per_root: Vec<Vec<Vec<usize>>> = (0..n)
        .into_par_iter()
        .map(|root| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(root as u64);
            (0..cfg.walks_per_node).map(|_| walk_from(graph, root, cfg, &mut rng)).collect()
        })
        .collect();
    let mut walks = Vec::with_capacity(n * cfg.walks_per_node);
    for round in 0..cfg.walks_per_node {
        for root_walks in &per_root {
            walks.push(root_walks[round].clone());
        }
    }
    Ok(WalkCorpus {
        walks,
        walk_length: cfg.walk_length,
        walks_per_node: cfg.walks_per_node,
        p: cfg.p,
        q: cfg.q,
        seed: cfg.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{EdgeRecord, EdgeType};

    fn undirected(ids: &[&str], pairs: &[(&str, &str)]) -> CommGraph {
        let edges: Vec<EdgeRecord> = pairs.iter().map(|(a, b)| EdgeRecord::new(*a, *b, EdgeType::Mention, 1)).collect();
        CommGraph::from_edges(ids.iter().copied(), &edges).unwrap().symmetrize()
    }

    #[test]
    fn path_walk_oscillates() {
        let g = undirected(&["A", "B"], &[("A", "B")]);
        let cfg = WalkConfig { walks_per_node: 1, walk_length: 3, ..Default::default() };
        let corpus = sample_walks(&g, &cfg).unwrap();
        assert_eq!(corpus.walks[0], vec![0, 1, 0]);
    }

    #[test]
    fn star_with_unit_bias_is_uniform() {
        let g = undirected(&["h", "l1", "l2", "l3", "l4"], &[("h", "l1"), ("h", "l2"), ("h", "l3"), ("h", "l4")]);
        for prev in [None, Some(1)] {
            let probs = transition_probabilities(&g, prev, 0, 1.0, 1.0, false);
            assert_eq!(probs.len(), 4);
            assert!(probs.iter().all(|&(_, p)| p == 0.25));
        }
    }

    #[test]
    fn triangle_second_step_matches_hand_weights() {
        // Triangle A-B-C plus a pendant D on C. Walk came A -> C.
        let g = undirected(&["A", "B", "C", "D"], &[("A", "B"), ("B", "C"), ("C", "A"), ("C", "D")]);
        let probs = transition_probabilities(&g, Some(0), 2, 0.5, 2.0, false);
        // back to A: 1/p = 2, to B (adjacent to A): 1, to D: 1/q = 0.5; total 3.5
        let expect = [(0, 2.0 / 3.5), (1, 1.0 / 3.5), (3, 0.5 / 3.5)];
        for ((n, p), (en, ep)) in probs.iter().zip(expect) {
            assert_eq!(*n, en);
            assert!((p - ep).abs() < 1e-15);
        }
    }

    #[test]
    fn isolated_root_yields_single_node_walk() {
        let g = undirected(&["A", "B", "C"], &[("A", "B")]);
        let corpus = sample_walks(&g, &WalkConfig { walks_per_node: 2, walk_length: 5, ..Default::default() }).unwrap();
        assert_eq!(corpus.walks.len(), 6);
        assert_eq!(corpus.walks[2], vec![2]);
        assert!(corpus.walks.iter().enumerate().all(|(i, w)| w[0] == i % 3 && w.len() <= 5));
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let pairs: Vec<(String, String)> = (0..30).map(|i| (format!("n{i:02}"), format!("n{:02}", (i * 7 + 3) % 30))).collect();
        let ids: Vec<String> = (0..30).map(|i| format!("n{i:02}")).collect();
        let edges: Vec<EdgeRecord> = pairs
            .iter()
            .filter(|(a, b)| a != b)
            .map(|(a, b)| EdgeRecord::new(a.clone(), b.clone(), EdgeType::Mention, 1))
            .collect();
        let g = CommGraph::from_edges(ids, &edges).unwrap().symmetrize();
        let cfg = WalkConfig { walks_per_node: 3, walk_length: 12, p: 0.7, q: 1.9, seed: 5, weighted: false };
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| sample_walks(&g, &cfg).unwrap());
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(|| sample_walks(&g, &cfg).unwrap());
        assert_eq!(one, four);
    }

    #[test]
    fn rejects_non_positive_bias() {
        let g = undirected(&["A", "B"], &[("A", "B")]);
        assert!(sample_walks(&g, &WalkConfig { p: 0.0, ..Default::default() }).is_err());
        assert!(sample_walks(&g, &WalkConfig { walk_length: 0, ..Default::default() }).is_err());
    }
}
