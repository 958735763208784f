//! Content-only retrieval over a handful of accounts: direct Jaccard and
//! cosine similarity, then LDA and LSA embeddings of the same texts.
//!
//! cargo run --example content_similarity

use botmatch::content::{lda_fit, lsa_fit, LdaConfig};
use botmatch::embedding::Metric;
use botmatch::ingest::clean_text;
use botmatch::knn::{query, Aggregation, DirectMeasure, DirectSpace, SearchSpace};
use botmatch::text::{build_vocab, count_matrix, TermWeighting, VocabConfig};

const ACCOUNTS: &[(&str, &str)] = &[
    ("amp1", "Vote NO on the pipeline! #stopthepipeline share now https://t.co/a"),
    ("amp2", "share now: vote no on the pipeline #stopthepipeline"),
    ("amp3", "The pipeline vote is rigged, share now! #stopthepipeline"),
    ("cook", "New recipe tonight: lentil soup with lemon and cumin"),
    ("chef", "Lemon cumin lentil soup is the best winter recipe"),
    ("news", "Council debates the pipeline vote tonight, live coverage"),
];

fn main() -> botmatch::Result<()> {
    let ids: Vec<String> = ACCOUNTS.iter().map(|(id, _)| id.to_string()).collect();
    let docs: Vec<Vec<String>> = ACCOUNTS.iter().map(|(_, t)| clean_text(t, false)).collect();
    println!("amp1 tokens: {:?}", docs[0]);

    let vocab = build_vocab(&docs, &VocabConfig { min_df: 1, max_df_frac: 0.9, ..Default::default() })?;
    let spaces = [
        SearchSpace::Direct(DirectSpace::new(
            "jaccard",
            ids.clone(),
            count_matrix(&docs, &vocab, TermWeighting::Binary),
            DirectMeasure::Jaccard,
        )?),
        SearchSpace::Direct(DirectSpace::new(
            "cosine",
            ids.clone(),
            count_matrix(&docs, &vocab, TermWeighting::TfIdf),
            DirectMeasure::Cosine,
        )?),
        lsa_fit(&count_matrix(&docs, &vocab, TermWeighting::TfIdf), &ids, 3, 0)?.into(),
        lda_fit(
            &count_matrix(&docs, &vocab, TermWeighting::Tf),
            &ids,
            &LdaConfig { topics: 2, iters: 200, ..Default::default() },
            Metric::Hellinger,
        )?
        .1
        .into(),
    ];
    for space in &spaces {
        let r = query(space, &["amp1"], 3, Aggregation::Mean)?;
        let hits: Vec<String> = r.hits.iter().map(|h| format!("{} ({:.3})", h.id, h.score)).collect();
        println!("{:8} {:?}: {}", space.name(), r.score_kind, hits.join(", "));
    }
    Ok(())
}
