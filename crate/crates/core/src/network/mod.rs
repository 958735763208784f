//! Network-side embedders.
//!
//! Walk-based models and trust propagation run on the symmetrized graph;
//! HOPE and graph factorization use the directed adjacency.

pub mod factorize;
pub mod katz;
pub mod role2vec;
pub mod skipgram;
pub mod sybilrank;
pub mod walks;

use crate::embedding::{EmbeddingSpace, Metric, SpaceKind};
use crate::error::Result;
use crate::graph::CommGraph;

pub use factorize::{graph_factorize, FactorizeConfig};
pub use katz::{hope_embed, katz_matrix, HopeConfig, KatzMatrix};
pub use role2vec::{role2vec_embed, Role2VecConfig};
pub use skipgram::{skipgram_train, SkipGramConfig};
pub use sybilrank::{sybil_rank, sybil_rank_space, TrustVector};
pub use walks::{sample_walks, WalkConfig, WalkCorpus};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Node2VecConfig {
    pub walks: WalkConfig,
    pub skipgram: SkipGramConfig,
}

/// Biased walks on the symmetrized graph followed by skip-gram training.
pub fn node2vec_embed(graph: &CommGraph, config: &Node2VecConfig) -> Result<EmbeddingSpace> {
    let g = graph.symmetrize();
    let corpus = sample_walks(&g, &config.walks)?;
    let (vectors, _) = skipgram_train(&corpus.walks, g.node_count(), &config.skipgram)?;
    EmbeddingSpace::new(
        "node2vec",
        g.ids().to_vec(),
        config.skipgram.dim,
        vectors,
        Metric::Cosine,
        SpaceKind::Network,
        config.skipgram.seed,
    )
}
