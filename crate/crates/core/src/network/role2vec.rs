//! Role-based embedding: nodes are mapped to structural roles by
//! Weisfeiler-Lehman relabeling, walks are rewritten as role sequences, and
//! every node takes the vector learned for its role.

use std::collections::BTreeMap;

use crate::embedding::{EmbeddingSpace, Metric, SpaceKind};
use crate::error::{Error, Result};
use crate::graph::CommGraph;
use crate::network::skipgram::{skipgram_train, SkipGramConfig};
use crate::network::walks::{sample_walks, WalkConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Role2VecConfig {
    pub wl_iters: usize,
    /// Size of the hashed role space.
    pub bins: u64,
    pub walks: WalkConfig,
    pub skipgram: SkipGramConfig,
}

impl Default for Role2VecConfig {
    fn default() -> Self {
        Role2VecConfig {
            wl_iters: 2,
            bins: 1 << 14,
            walks: WalkConfig::default(),
            skipgram: SkipGramConfig { dim: 128, ..Default::default() },
        }
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(words: &[u64]) -> u64 {
    let mut h = FNV_OFFSET;
    for w in words {
        for b in w.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(FNV_PRIME);
        }
    }
    h
}

/// `⌊log2(deg + 1)⌋` over distinct neighbors.
pub fn degree_label(degree: usize) -> u64 {
    (usize::BITS - 1 - (degree + 1).leading_zeros()) as u64
}

/// Structural role of every node after `wl_iters` rounds of relabeling.
/// Each round hashes the node's label followed by its sorted neighbor
/// labels with 64-bit FNV-1a, reduced modulo `bins`.
pub fn wl_roles(graph: &CommGraph, wl_iters: usize, bins: u64) -> Vec<u64> {
    let n = graph.node_count();
    let mut labels: Vec<u64> = (0..n).map(|v| degree_label(graph.distinct_degree(v))).collect();
    let mut buf = Vec::new();
    for _ in 0..wl_iters {
        let next = (0..n)
            .map(|v| {
                buf.clear();
                buf.push(labels[v]);
                let start = buf.len();
                buf.extend(graph.neighbors(v).iter().map(|&(u, _)| labels[u]));
                buf[start..].sort_unstable();
                fnv1a(&buf) % bins
            })
            .collect();
        labels = next;
    }
    labels
}

pub fn role2vec_embed(graph: &CommGraph, config: &Role2VecConfig) -> Result<(EmbeddingSpace, Vec<u64>)> {
    if config.bins == 0 {
        return Err(Error::Config("role hash space must be non-empty".into()));
    }
    let g = graph.symmetrize();
    let roles = wl_roles(&g, config.wl_iters, config.bins);
    let mut compact: BTreeMap<u64, usize> = BTreeMap::new();
    for &r in &roles {
        let next = compact.len();
        compact.entry(r).or_insert(next);
    }
    let token_of: Vec<usize> = roles.iter().map(|r| compact[r]).collect();
    let corpus = sample_walks(&g, &config.walks)?;
    let role_walks: Vec<Vec<usize>> = corpus.walks.iter().map(|w| w.iter().map(|&v| token_of[v]).collect()).collect();
    let dim = config.skipgram.dim;
    let (vectors, _) = skipgram_train(&role_walks, compact.len(), &config.skipgram)?;
    let data: Vec<f64> = token_of.iter().flat_map(|&t| vectors[t * dim..(t + 1) * dim].iter().copied()).collect();
    let space = EmbeddingSpace::new(
        "role2vec",
        g.ids().to_vec(),
        dim,
        data,
        Metric::Cosine,
        SpaceKind::Network,
        config.skipgram.seed,
    )?;
    Ok((space, roles))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{EdgeRecord, EdgeType};

    fn graph(n: usize, pairs: &[(usize, usize)]) -> CommGraph {
        let ids: Vec<String> = (0..n).map(|i| format!("v{i:02}")).collect();
        let edges: Vec<EdgeRecord> = pairs
            .iter()
            .map(|&(a, b)| EdgeRecord::new(ids[a].clone(), ids[b].clone(), EdgeType::Mention, 1))
            .collect();
        CommGraph::from_edges(ids, &edges).unwrap().symmetrize()
    }

    #[test]
    fn degree_labels() {
        assert_eq!(degree_label(0), 0);
        assert_eq!(degree_label(1), 1);
        assert_eq!(degree_label(2), 1);
        assert_eq!(degree_label(3), 2);
        assert_eq!(degree_label(7), 3);
    }

    #[test]
    fn regular_graph_has_one_role() {
        let cycle: Vec<(usize, usize)> = (0..8).map(|i| (i, (i + 1) % 8)).collect();
        let g = graph(8, &cycle);
        let roles = wl_roles(&g, 2, 1 << 14);
        assert!(roles.iter().all(|&r| r == roles[0]));
        let cfg = Role2VecConfig {
            walks: WalkConfig { walks_per_node: 2, walk_length: 10, ..Default::default() },
            skipgram: SkipGramConfig { dim: 4, epochs: 1, ..Default::default() },
            ..Default::default()
        };
        let (space, _) = role2vec_embed(&g, &cfg).unwrap();
        assert!((1..8).all(|i| space.row(i) == space.row(0)));
    }

    #[test]
    fn star_has_hub_and_leaf_roles() {
        let g = graph(6, &[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5)]);
        let roles = wl_roles(&g, 2, 1 << 14);
        let distinct: std::collections::BTreeSet<_> = roles.iter().collect();
        assert_eq!(distinct.len(), 2);
        assert!(roles[1..].iter().all(|&r| r == roles[1]));
    }
}
