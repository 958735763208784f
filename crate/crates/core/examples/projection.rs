//! 2-D views of an embedding for plotting: PCA and t-SNE of an LDA space,
//! written as CSV with labels.
//!
//! cargo run --release --example projection > points.csv

use botmatch::content::{lda_fit, LdaConfig};
use botmatch::embedding::Metric;
use botmatch::eval::{gen_planted_graph, gen_topic_corpus, project_2d, write_projection_csv, ProjectionMethod, TsneConfig};
use botmatch::text::{build_vocab, count_matrix, TermWeighting, VocabConfig};

fn main() -> botmatch::Result<()> {
    let planted = gen_planted_graph(&[50, 50], 0.1, 0.01, 3)?;
    let docs = gen_topic_corpus(&planted.blocks, 40, 80, 0.3, 3)?;
    let ids = planted.graph.ids().to_vec();
    let tf = count_matrix(&docs, &build_vocab(&docs, &VocabConfig::default())?, TermWeighting::Tf);
    let (_, lda) = lda_fit(&tf, &ids, &LdaConfig { topics: 6, iters: 100, ..Default::default() }, Metric::Cosine)?;

    let pca = project_2d(&lda, ProjectionMethod::Pca, &TsneConfig::default())?;
    let spread = |c: usize| pca.coords.column(c).iter().fold(0.0f64, |m, x| m.max(x.abs()));
    eprintln!("pca extent {:.3} x {:.3}", spread(0), spread(1));

    let tsne = project_2d(&lda, ProjectionMethod::Tsne, &TsneConfig { perplexity: 20.0, iters: 500, ..Default::default() })?;
    write_projection_csv(std::io::stdout().lock(), &tsne, Some(&planted.labels))?;
    Ok(())
}
