//! Planted-community benchmark: two blocks of 100 accounts, a sparse
//! block-model graph and a noisy topic corpus. Prints p@10 for node2vec,
//! LDA and the warm-started fusion over several seeds.
//!
//! cargo run --release --example evaluate_planted [seeds]

use std::time::Instant;

use botmatch::content::{lda_fit, LdaConfig};
use botmatch::embedding::Metric;
use botmatch::eval::{gen_planted_graph, gen_topic_corpus, precision_at_k, random_baseline};
use botmatch::fusion::warm_start_factorize;
use botmatch::knn::SearchSpace;
use botmatch::network::{node2vec_embed, FactorizeConfig, Node2VecConfig, SkipGramConfig, WalkConfig};
use botmatch::text::{build_vocab, count_matrix, TermWeighting, VocabConfig};

fn main() -> botmatch::Result<()> {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let started = Instant::now();
    for seed in 0..seeds {
        let planted = gen_planted_graph(&[100, 100], 0.1, 0.005, seed)?;
        let docs = gen_topic_corpus(&planted.blocks, 50, 100, 0.3, seed)?;
        let ids = planted.graph.ids().to_vec();

        let n2v = node2vec_embed(
            &planted.graph,
            &Node2VecConfig {
                walks: WalkConfig { walks_per_node: 10, walk_length: 40, seed, ..Default::default() },
                skipgram: SkipGramConfig { dim: 32, window: 5, epochs: 1, seed, ..Default::default() },
            },
        )?;

        let vocab = build_vocab(&docs, &VocabConfig::default())?;
        let tf = count_matrix(&docs, &vocab, TermWeighting::Tf);
        let lda_cfg = LdaConfig { topics: 10, iters: 100, seed, ..Default::default() };
        let (_, lda) = lda_fit(&tf, &ids, &lda_cfg, Metric::Cosine)?;

        let fused_cfg = FactorizeConfig { dim: 10, seed, ..Default::default() };
        let (fused, _) = warm_start_factorize(&planted.graph, &lda, &fused_cfg)?;

        let mut line = format!("seed {seed}:");
        for space in [n2v, lda, fused] {
            let name = space.name().to_string();
            let p = precision_at_k(&SearchSpace::Vectors(space), &planted.labels, 10)?;
            line.push_str(&format!("  {name} {:.3}", p.mean));
        }
        println!("{line}");
    }
    println!("random baseline {:.4}", random_baseline(200, 100));
    println!("elapsed {:.1}s", started.elapsed().as_secs_f64());
    Ok(())
}
