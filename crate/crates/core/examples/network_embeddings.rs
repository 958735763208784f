//! Network-only spaces on a planted two-community graph: node2vec, HOPE,
//! graph factorization and role2vec, scored by p@10.
//!
//! cargo run --release --example network_embeddings

use botmatch::eval::{gen_planted_graph, precision_at_k, random_baseline};
use botmatch::knn::SearchSpace;
use botmatch::network::{
    graph_factorize, hope_embed, node2vec_embed, role2vec_embed, FactorizeConfig, HopeConfig, Node2VecConfig,
    Role2VecConfig, SkipGramConfig, WalkConfig,
};

fn main() -> botmatch::Result<()> {
    let planted = gen_planted_graph(&[60, 60], 0.15, 0.01, 4)?;
    let g = &planted.graph;
    println!("{} nodes, {} edges", g.node_count(), g.edge_count());

    let walks = WalkConfig { walks_per_node: 10, walk_length: 40, ..Default::default() };
    let skipgram = SkipGramConfig { dim: 32, window: 5, epochs: 1, ..Default::default() };
    let n2v = node2vec_embed(g, &Node2VecConfig { walks, skipgram })?;
    let (hope, katz, _) = hope_embed(g, &HopeConfig { dim: 16, ..Default::default() })?;
    println!("katz alpha {:.4}", katz.alpha);
    let (gf, losses) = graph_factorize(g, &FactorizeConfig { dim: 16, epochs: 200, ..Default::default() })?;
    println!("gf loss {:.2} -> {:.2}", losses[0], losses[losses.len() - 1]);
    // Roles capture structural position, not community, so expect less here.
    let (roles, _) = role2vec_embed(g, &Role2VecConfig { walks, skipgram, ..Default::default() })?;

    for space in [n2v, hope, gf, roles] {
        let name = space.name().to_string();
        let p = precision_at_k(&SearchSpace::Vectors(space), &planted.labels, 10)?;
        println!("{name:10} p@10 {:.3}", p.mean);
    }
    println!("random     p@10 {:.3}", random_baseline(g.node_count(), 60));
    Ok(())
}
