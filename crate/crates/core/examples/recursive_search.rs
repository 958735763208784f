//! Analyst-style breadth-first expansion from one known bot. Each hop
//! queries from the accounts accepted at the previous hop; here an oracle
//! stands in for the analyst and accepts true positives only.
//!
//! cargo run --release --example recursive_search

use botmatch::content::{lda_fit, LdaConfig};
use botmatch::embedding::Metric;
use botmatch::eval::{gen_planted_graph, gen_topic_corpus};
use botmatch::fusion::warm_start_factorize;
use botmatch::knn::{recursive_expand, Aggregation, SearchSpace};
use botmatch::network::FactorizeConfig;
use botmatch::text::{build_vocab, count_matrix, TermWeighting, VocabConfig};

fn main() -> botmatch::Result<()> {
    let planted = gen_planted_graph(&[100, 100], 0.1, 0.005, 0)?;
    let docs = gen_topic_corpus(&planted.blocks, 50, 100, 0.3, 0)?;
    let ids = planted.graph.ids().to_vec();
    let vocab = build_vocab(&docs, &VocabConfig::default())?;
    let tf = count_matrix(&docs, &vocab, TermWeighting::Tf);
    let (_, lda) = lda_fit(&tf, &ids, &LdaConfig { topics: 10, iters: 100, ..Default::default() }, Metric::Cosine)?;
    let (fused, _) = warm_start_factorize(&planted.graph, &lda, &FactorizeConfig { dim: 10, ..Default::default() })?;
    let space = SearchSpace::Vectors(fused);

    let labels = &planted.labels;
    let accept = |h: &botmatch::knn::Hit| labels.is_positive(&h.id);
    let expansion = recursive_expand(&space, &["n0000"], 10, 3, Aggregation::Mean, &accept)?;
    for hop in 1..=3 {
        let at: Vec<_> = expansion.found.iter().filter(|d| d.hop == hop).collect();
        let accepted = at.iter().filter(|d| d.accepted).count();
        println!("hop {hop}: {} found, {accepted} accepted", at.len());
    }
    let total = expansion.found.iter().filter(|d| d.accepted).count() + 1;
    println!("{total} of {} bots recovered", labels.positive_count());
    Ok(())
}
