//! Trust propagation from a few known-honest accounts. A dense honest
//! region joined to a sybil region by a handful of attack edges: sybils
//! should end up at the bottom of the ranking.
//!
//! cargo run --example sybilrank_ranking

use botmatch::eval::roc_auc;
use botmatch::graph::CommGraph;
use botmatch::ingest::{EdgeRecord, EdgeType};
use botmatch::knn::{query, Aggregation, PropagationSpace, SearchSpace};
use botmatch::network::sybil_rank_space;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> botmatch::Result<()> {
    let (honest, sybil) = (80, 40);
    let id = |i: usize| if i < honest { format!("h{i:03}") } else { format!("s{:03}", i - honest) };
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut edges = Vec::new();
    for u in 0..honest + sybil {
        for v in 0..honest + sybil {
            let same = (u < honest) == (v < honest);
            if u != v && same && rng.random::<f64>() < 0.1 {
                edges.push(EdgeRecord::new(id(u), id(v), EdgeType::Retweet, 1));
            }
        }
    }
    for a in 0..5 {
        edges.push(EdgeRecord::new(id(a * 7), id(honest + a * 3), EdgeType::Mention, 1));
    }
    let g = CommGraph::from_edges((0..honest + sybil).map(id), &edges)?;

    let space = sybil_rank_space(&g, &["h000", "h010", "h020"], None)?;
    let scores = space.data();
    let is_honest: Vec<bool> = space.ids().iter().map(|i| i.starts_with('h')).collect();
    println!("AUC honest vs sybil: {:.3}", roc_auc(scores, &is_honest)?);

    // As a search space trust is recomputed from whatever seeds the query uses.
    let prop = SearchSpace::Propagation(PropagationSpace::new("sybilrank", &g, None));
    let r = query(&prop, &["h005"], 5, Aggregation::Mean)?;
    for h in &r.hits {
        println!("{:2}. {} trust {:.5}", h.rank, h.id, h.score);
    }
    Ok(())
}
