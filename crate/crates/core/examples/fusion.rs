//! Combining content and network: a warm-started graph factorization
//! seeded from LDA topics, and a plain concatenation of the two spaces.
//! Uses a noisy corpus where neither view alone is perfect.
//!
//! cargo run --release --example fusion

use botmatch::content::{lda_fit, LdaConfig};
use botmatch::embedding::Metric;
use botmatch::eval::{gen_planted_graph, gen_topic_corpus, precision_at_k};
use botmatch::fusion::{concat_spaces, warm_start_factorize};
use botmatch::knn::SearchSpace;
use botmatch::network::{graph_factorize, FactorizeConfig};
use botmatch::text::{build_vocab, count_matrix, TermWeighting, VocabConfig};

fn main() -> botmatch::Result<()> {
    let planted = gen_planted_graph(&[80, 80], 0.06, 0.02, 2)?;
    let docs = gen_topic_corpus(&planted.blocks, 40, 40, 0.7, 2)?;
    let ids = planted.graph.ids().to_vec();

    let vocab = build_vocab(&docs, &VocabConfig::default())?;
    let tf = count_matrix(&docs, &vocab, TermWeighting::Tf);
    let (_, lda) = lda_fit(&tf, &ids, &LdaConfig { topics: 8, iters: 100, ..Default::default() }, Metric::Cosine)?;

    let cfg = FactorizeConfig { dim: 8, epochs: 100, ..Default::default() };
    let (gf, _) = graph_factorize(&planted.graph, &cfg)?;
    let (warm, losses) = warm_start_factorize(&planted.graph, &lda, &cfg)?;
    println!("warm start loss {:.2} -> {:.2}", losses[0], losses[losses.len() - 1]);
    let concat = concat_spaces(&lda, &gf, 0.5)?;

    for space in [lda, gf, warm, concat] {
        let name = space.name().to_string();
        let p = precision_at_k(&SearchSpace::Vectors(space), &planted.labels, 10)?;
        println!("{name:10} p@10 {:.3}", p.mean);
    }
    Ok(())
}
