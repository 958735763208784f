//! Raw posts to a dataset directory: parse JSONL, collapse interactions into
//! typed edges, prune non-authors and isolates, write the files and load
//! them back.
//!
//! cargo run --example ingest_tweets [out_dir]

use std::path::PathBuf;

use botmatch::dataset::Dataset;
use botmatch::eval::{gen_planted_graph, gen_posts, gen_topic_corpus};
use botmatch::ingest::{assemble_dataset, build_edges, parse_posts, post_to_json, PostFormat};

fn main() -> botmatch::Result<()> {
    let out: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "target/example-ingest".into()).into();

    // Stand-in for a collected stream: a small planted network rendered as posts.
    let planted = gen_planted_graph(&[25, 25], 0.15, 0.01, 1)?;
    let docs = gen_topic_corpus(&planted.blocks, 30, 60, 0.2, 1)?;
    let jsonl: String = gen_posts(&planted, &docs, 15, 1)?.iter().map(|p| format!("{}\n", post_to_json(p))).collect();

    let parsed = parse_posts(jsonl.as_bytes(), PostFormat::Jsonl)?;
    let edges = build_edges(&parsed.posts);
    println!("{} posts ({} skipped), {} typed edges", parsed.posts.len(), parsed.skipped, edges.len());

    let (accounts, kept) = assemble_dataset(&parsed.posts, &edges, false)?;
    println!("{} accounts and {} edges after pruning", accounts.len(), kept.len());

    Dataset::write_files(&out, &accounts, &kept, Some(&planted.labels))?;
    let ds = Dataset::load(&out)?;
    let first = &ds.accounts()[0];
    println!("loaded '{}' from {}: spaces {:?}", ds.name(), out.display(), ds.space_names());
    println!("{} posts {} times, top tags {:?}", first.account_id, first.n_posts, first.top_hashtags(3));
    Ok(())
}
