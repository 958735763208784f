//! Synthetic benchmarks with known ground truth: a stochastic block model
//! communication graph and a topic corpus aligned with its blocks.

use chrono::{Duration, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::eval::LabelSet;
use crate::graph::CommGraph;
use crate::ingest::{EdgeRecord, EdgeType, RawPost};
use crate::randstring::{dictionary_handle, random_handle};

#[derive(Debug, Clone)]
pub struct PlantedGraph {
    pub graph: CommGraph,
    pub labels: LabelSet,
    /// Block of every node, in node order.
    pub blocks: Vec<usize>,
}

/// Node ids `n0000`, `n0001`, ... sort in generation order.
pub fn planted_id(i: usize) -> String {
    format!("n{i:04}")
}

/// Directed stochastic block model. Every ordered pair `(u, v)`, `u != v`,
/// gets a mention edge with probability `intra_p` inside a block and
/// `inter_p` across blocks. Block 0 is the positive class. Isolated nodes
/// are kept.
pub fn gen_planted_graph(block_sizes: &[usize], intra_p: f64, inter_p: f64, seed: u64) -> Result<PlantedGraph> {
    if block_sizes.is_empty() || block_sizes.contains(&0) {
        return Err(Error::Config("every block needs at least one node".into()));
    }
    if !(0.0..=1.0).contains(&intra_p) || !(0.0..=1.0).contains(&inter_p) {
        return Err(Error::Config("edge probabilities must lie in [0, 1]".into()));
    }
    if intra_p <= inter_p {
        return Err(Error::Config(format!("intra_p ({intra_p}) must exceed inter_p ({inter_p})")));
    }
    let blocks: Vec<usize> = block_sizes.iter().enumerate().flat_map(|(b, &n)| std::iter::repeat_n(b, n)).collect();
    let n = blocks.len();
    let ids: Vec<String> = (0..n).map(planted_id).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u == v {
                continue;
            }
            let p = if blocks[u] == blocks[v] { intra_p } else { inter_p };
            if rng.random::<f64>() < p {
                edges.push(EdgeRecord::new(ids[u].clone(), ids[v].clone(), EdgeType::Mention, 1));
            }
        }
    }
    let labels = ids.iter().zip(&blocks).map(|(id, &b)| (id.clone(), b == 0)).collect();
    let graph = CommGraph::from_edges(ids, &edges)?;
    Ok(PlantedGraph { graph, labels, blocks })
}

/// One document per node. A token is drawn from the node's private class
/// vocabulary (`c{class}w{i}`) with probability `1 - noise_frac` and from
/// the shared vocabulary (`sw{i}`) otherwise; both have `vocab_per_class`
/// words drawn uniformly. Each node uses its own random stream.
pub fn gen_topic_corpus(
    blocks: &[usize],
    vocab_per_class: usize,
    doc_len: usize,
    noise_frac: f64,
    seed: u64,
) -> Result<Vec<Vec<String>>> {
    if !(0.0..1.0).contains(&noise_frac) {
        return Err(Error::Config(format!("noise_frac {noise_frac} outside [0, 1)")));
    }
    if vocab_per_class == 0 {
        return Err(Error::Config("vocab_per_class must be at least 1".into()));
    }
    Ok(blocks
        .iter()
        .enumerate()
        .map(|(node, &class)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(node as u64 + 1);
            (0..doc_len)
                .map(|_| {
                    let shared = rng.random::<f64>() < noise_frac;
                    let w = rng.random_range(0..vocab_per_class);
                    if shared {
                        format!("sw{w:03}")
                    } else {
                        format!("c{class}w{w:03}")
                    }
                })
                .collect()
        })
        .collect())
}

/// Render a planted graph and corpus as raw posts so the full ingest path
/// can be exercised. Each node's document is split into posts of
/// `tokens_per_post` tokens and each out-edge becomes one mention, spread
/// over the node's posts. Positive accounts get random-string screen names,
/// the rest dictionary-style handles.
pub fn gen_posts(planted: &PlantedGraph, docs: &[Vec<String>], tokens_per_post: usize, seed: u64) -> Result<Vec<RawPost>> {
    let g = &planted.graph;
    if docs.len() != g.node_count() {
        return Err(Error::Alignment(format!("{} documents for {} nodes", docs.len(), g.node_count())));
    }
    let tokens_per_post = tokens_per_post.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = (0..g.node_count())
        .map(|v| if planted.blocks[v] == 0 { random_handle(&mut rng, 15) } else { dictionary_handle(&mut rng) })
        .collect();
    let start = Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).single().expect("valid date");
    let mut posts = Vec::new();
    for u in 0..g.node_count() {
        let chunks: Vec<String> = docs[u].chunks(tokens_per_post).map(|c| c.join(" ")).collect();
        let targets: Vec<&str> = g.out_edges(u).iter().map(|a| g.id(a.node)).collect();
        let count = chunks.len().max(targets.len()).max(1);
        for i in 0..count {
            let stamp = start + Duration::minutes((posts.len()) as i64);
            posts.push(RawPost {
                post_id: format!("p{:07}", posts.len()),
                author_id: g.id(u).to_string(),
                author_screen_name: names[u].clone(),
                text: chunks.get(i).cloned().unwrap_or_default(),
                retweeted_author_id: None,
                replied_author_id: None,
                mentioned_author_ids: targets.get(i).map(|t| vec![t.to_string()]).unwrap_or_default(),
                timestamp: Some(stamp.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)),
            });
        }
    }
    Ok(posts)
}
