mod common;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use botmatch::content::{LdaConfig, LdaModel};
use botmatch::embedding::{EmbeddingSpace, Metric, SpaceKind};
use botmatch::fusion::concat_spaces;
use botmatch::graph::{CommGraph, DEFAULT_DENSE_CAP};
use botmatch::ingest::{
    assemble_dataset, build_edges, clean_text, parse_posts, prune, EdgeRecord, EdgeType, PostFormat,
};
use botmatch::knn::{query, Aggregation, DirectMeasure, DirectSpace, SearchSpace};
use botmatch::network::sybilrank::sybil_rank;
use botmatch::network::walks::transition_probabilities;
use botmatch::text::{build_vocab, count_matrix, TermWeighting, VocabConfig};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use unicode_segmentation::UnicodeSegmentation;

const EVERYTHING: VocabConfig = VocabConfig { min_df: 1, max_df_frac: 1.0, max_terms: usize::MAX };

fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

#[test]
fn vocabulary_follows_document_frequency_on_a_zipf_corpus() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    // Term w_r appears with weight 1/r.
    let weights: Vec<f64> = (1..=300).map(|r| 1.0 / r as f64).collect();
    let total: f64 = weights.iter().sum();
    let docs: Vec<Vec<String>> = (0..400)
        .map(|_| {
            (0..30)
                .map(|_| {
                    let mut u = rng.random::<f64>() * total;
                    let r = weights.iter().position(|w| {
                        u -= w;
                        u < 0.0
                    });
                    format!("w{}", r.unwrap_or(299))
                })
                .collect()
        })
        .collect();

    let mut df: HashMap<&str, usize> = HashMap::new();
    for d in &docs {
        for t in d.iter().map(String::as_str).collect::<HashSet<_>>() {
            *df.entry(t).or_default() += 1;
        }
    }
    let cfg = VocabConfig { min_df: 3, max_df_frac: 0.5, max_terms: 120 };
    let mut expected: Vec<(&str, usize)> =
        df.iter().map(|(t, d)| (*t, *d)).filter(|&(_, d)| d >= 3 && d as f64 <= 200.0).collect();
    expected.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    expected.truncate(120);

    let vocab = build_vocab(&docs, &cfg).unwrap();
    let got: Vec<(&str, usize)> = vocab.terms().iter().enumerate().map(|(i, t)| (t.as_str(), vocab.doc_freq(i))).collect();
    assert_eq!(got, expected);
    // The most frequent words are common enough to be cut by max_df.
    assert!(vocab.term_id("w0").is_none());
}

#[test]
fn tf_idf_matches_hand_computation() {
    let docs = vec![toks("a a b"), toks("b c"), toks("b d")];
    let vocab = build_vocab(&docs, &EVERYTHING).unwrap();
    assert_eq!(vocab.terms(), ["b", "a", "c", "d"]);
    let m = count_matrix(&docs, &vocab, TermWeighting::TfIdf).to_dense();
    // idf(b) = 1 + ln(3/3) = 1, idf(a) = idf(c) = idf(d) = 1 + ln 3.
    let expected = [
        [1.0, 4.197225, 0.0, 0.0],
        [1.0, 0.0, 2.098612, 0.0],
        [1.0, 0.0, 0.0, 2.098612],
    ];
    for (i, row) in expected.iter().enumerate() {
        for (j, &e) in row.iter().enumerate() {
            assert!((m[(i, j)] - e).abs() < 5e-7, "({i},{j}) {} vs {e}", m[(i, j)]);
        }
    }
    let binary = count_matrix(&docs, &vocab, TermWeighting::Binary).to_dense();
    assert_eq!(binary[(0, 1)], 1.0);
    let tf = count_matrix(&docs, &vocab, TermWeighting::Tf).to_dense();
    assert_eq!(tf[(0, 1)], 2.0);
}

#[test]
fn cleaning_keeps_the_same_letters_as_word_segmentation() {
    assert_eq!(clean_text("#elxn43 Vote früh 投票", false), ["#elxn43", "vote", "früh", "投票"]);
    assert_eq!(clean_text("#elxn43 Vote früh 投票", true), ["vote", "früh", "投票"]);
    let texts = [
        "#elxn43 Vote früh 投票",
        "RT @someone: Große Wahl, heute!! 🇨🇦🗳️ vote-now",
        "Ελλάδα και Κύπρος; مرحبا بالعالم",
        "numbers 2019 and ½ plus café…",
    ];
    for text in texts {
        let ours: String = clean_text(text, false)
            .iter()
            .map(|t| t.trim_start_matches(['#', '@']))
            .collect::<Vec<_>>()
            .concat();
        let theirs: String = text
            .unicode_words()
            .filter(|w| !matches!(w.to_lowercase().as_str(), "rt" | "via"))
            .map(str::to_lowercase)
            .collect::<Vec<_>>()
            .concat();
        assert_eq!(ours, theirs, "{text}");
    }
    assert!(clean_text("see https://t.co/abc www.example.com", false) == ["see"]);
}

/// 100 posts from 20 authors, ~10% of mentions pointing at accounts that
/// never post.
fn post_fixture() -> Vec<Value> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    (0..100)
        .map(|i| {
            let author = rng.random_range(0..20);
            let mut post = json!({
                "id_str": format!("p{i}"),
                "user": { "id_str": format!("u{author}"), "screen_name": format!("user_{author}") },
                "full_text": format!("post {i} about #topic{}", i % 3),
                "created_at": "Mon Oct 21 12:00:00 +0000 2019",
            });
            let mentions: Vec<Value> = (0..rng.random_range(0..4))
                .map(|_| {
                    let target =
                        if rng.random::<f64>() < 0.1 { format!("ghost{}", rng.random_range(0..5)) } else { format!("u{}", rng.random_range(0..20)) };
                    json!({ "id_str": target })
                })
                .collect();
            post["entities"] = json!({ "user_mentions": mentions });
            if i % 5 == 0 {
                post["retweeted_status"] = json!({ "user": { "id_str": format!("u{}", (author + 1) % 20) } });
            }
            if i % 7 == 0 {
                post["in_reply_to_user_id_str"] = json!(format!("u{}", (author + 3) % 20));
            }
            post
        })
        .collect()
}

#[test]
fn hundred_post_fixture_agrees_with_an_independent_reading() {
    let fixture = post_fixture();
    let jsonl: String = fixture.iter().map(|v| format!("{v}\n")).collect();
    let parsed = parse_posts(jsonl.as_bytes(), PostFormat::Jsonl).unwrap();
    assert_eq!(parsed.posts.len(), 100);
    assert_eq!(parsed.skipped, 0);

    // Second reading: walk the JSON directly.
    let mut oracle: BTreeMap<(String, String, &str), u64> = BTreeMap::new();
    let mut authors = BTreeSet::new();
    for v in &fixture {
        let author = v["user"]["id_str"].as_str().unwrap().to_string();
        authors.insert(author.clone());
        let mut add = |t: &str, kind| {
            if t != author {
                *oracle.entry((author.clone(), t.to_string(), kind)).or_default() += 1;
            }
        };
        if let Some(rt) = v.pointer("/retweeted_status/user/id_str").and_then(Value::as_str) {
            add(rt, "retweet");
        }
        if let Some(r) = v["in_reply_to_user_id_str"].as_str() {
            add(r, "reply");
        }
        let mentions: BTreeSet<&str> =
            v["entities"]["user_mentions"].as_array().unwrap().iter().map(|m| m["id_str"].as_str().unwrap()).collect();
        for m in mentions {
            add(m, "mention");
        }
    }
    let edges = build_edges(&parsed.posts);
    let got: BTreeMap<(String, String, &str), u64> =
        edges.iter().map(|e| ((e.source.clone(), e.target.clone(), e.edge_type.as_str()), e.weight)).collect();
    assert_eq!(got, oracle);

    let phantom = oracle.keys().filter(|(_, t, _)| t.starts_with("ghost")).count();
    assert!(phantom > 0, "fixture should contain phantom mentions");
    let (accounts, kept) = assemble_dataset(&parsed.posts, &edges, false).unwrap();
    assert!(kept.iter().all(|e| authors.contains(&e.source) && authors.contains(&e.target)));
    assert_eq!(kept.len(), oracle.keys().filter(|(s, t, _)| authors.contains(s) && authors.contains(t)).count());
    assert!(accounts.iter().all(|a| a.n_posts > 0));
    assert!(accounts.iter().map(|a| a.n_posts).sum::<usize>() <= 100);

    // The CSV layout carries the same posts.
    let mut csv = Vec::new();
    botmatch::ingest::write_posts_csv(&mut csv, &parsed.posts).unwrap();
    let again = parse_posts(csv.as_slice(), PostFormat::Csv).unwrap();
    assert_eq!(again.posts, parsed.posts);
}

/// Random directed graph with exactly `n` nodes and `m` distinct edges.
fn random_digraph(n: usize, m: usize, seed: u64) -> (Vec<String>, Vec<EdgeRecord>) {
    let ids: Vec<String> = (0..n).map(|i| format!("a{i:05}")).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = BTreeSet::new();
    while pairs.len() < m {
        let (s, t) = (rng.random_range(0..n), rng.random_range(0..n));
        if s != t {
            pairs.insert((s, t));
        }
    }
    let edges = pairs
        .into_iter()
        .map(|(s, t)| EdgeRecord::new(ids[s].clone(), ids[t].clone(), EdgeType::Mention, rng.random_range(1..4)))
        .collect();
    (ids, edges)
}

#[test]
fn campaign_sized_graph_round_trips_and_symmetrizes() {
    let (ids, edges) = random_digraph(1958, 35931, 2019);
    let g = CommGraph::from_edges(ids.clone(), &edges).unwrap();
    assert_eq!(g.node_count(), 1958);
    assert_eq!(g.edge_count(), 35931);

    let mut bytes = Vec::new();
    g.write_snapshot(&mut bytes).unwrap();
    assert_eq!(&bytes[..4], b"BMG1");
    let back = CommGraph::read_snapshot(bytes.as_slice()).unwrap();
    assert_eq!(back.ids(), g.ids());
    assert_eq!(back.edge_records(), g.edge_records());
    assert_eq!(back.is_undirected(), g.is_undirected());

    let a = g.dense_adjacency(DEFAULT_DENSE_CAP).unwrap();
    let s = g.symmetrize();
    assert!(s.is_undirected());
    assert_eq!(s.dense_adjacency(DEFAULT_DENSE_CAP).unwrap(), a.transpose() + &a);
    let mut sym_bytes = Vec::new();
    s.write_snapshot(&mut sym_bytes).unwrap();
    assert!(CommGraph::read_snapshot(sym_bytes.as_slice()).unwrap().is_undirected());
    assert!(g.dense_adjacency(1000).is_err());
}

// ---- invariants ----

fn space_strategy() -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (3usize..30, 1usize..6).prop_flat_map(|(n, d)| (Just(n), Just(d), prop::collection::vec(-3i32..4, n * d)))
        .prop_map(|(n, d, v)| (n, d, v.into_iter().map(f64::from).collect()))
}

fn make_space(n: usize, d: usize, data: Vec<f64>, metric: Metric) -> SearchSpace {
    let ids = (0..n).map(|i| format!("x{i:02}")).collect();
    EmbeddingSpace::new("p", ids, d, data, metric, SpaceKind::Content, 0).unwrap().into()
}

fn graph_strategy() -> impl Strategy<Value = (usize, Vec<(usize, usize, u64)>)> {
    (2usize..15).prop_flat_map(|n| (Just(n), prop::collection::vec((0..n, 0..n, 1u64..4), 1..40)))
}

fn graph_from(n: usize, raw: &[(usize, usize, u64)], name: impl Fn(usize) -> String) -> CommGraph {
    let edges: Vec<EdgeRecord> =
        raw.iter().filter(|(s, t, _)| s != t).map(|&(s, t, w)| EdgeRecord::new(name(s), name(t), EdgeType::Reply, w)).collect();
    CommGraph::from_edges((0..n).map(&name), &edges).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn query_ignores_seed_order((n, d, data) in space_strategy(), picks in prop::collection::vec(any::<prop::sample::Index>(), 1..4), shuffle in any::<u64>()) {
        let space = make_space(n, d, data, Metric::Euclidean);
        let mut seeds: Vec<String> = picks.iter().map(|p| format!("x{:02}", p.index(n))).collect();
        let a = query(&space, &seeds, 5, Aggregation::Mean).unwrap();
        seeds.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle));
        let b = query(&space, &seeds, 5, Aggregation::Mean).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn hits_are_sorted_and_agree_with_brute_force((n, d, data) in space_strategy(), seed in any::<prop::sample::Index>(), min_dist in any::<bool>()) {
        let rows: Vec<Vec<f64>> = data.chunks(d).map(<[f64]>::to_vec).collect();
        let space = make_space(n, d, data, Metric::Euclidean);
        let s = seed.index(n);
        let agg = if min_dist { Aggregation::MinDist } else { Aggregation::Mean };
        let r = query(&space, &[format!("x{s:02}")], n, agg).unwrap();
        prop_assert!(r.hits.windows(2).all(|w| w[0].score <= w[1].score));
        let ids: Vec<String> = (0..n).map(|i| format!("x{i:02}")).collect();
        let oracle = common::brute_force_knn(&ids, &rows, &common::OracleMetric::Euclidean, &[s], n, min_dist);
        prop_assert_eq!(r.hits.iter().map(|h| h.id.clone()).collect::<Vec<_>>(), oracle);
    }

    #[test]
    fn seeds_never_return_even_when_duplicated((n, d, mut data) in space_strategy(), copies in 1usize..4) {
        // Append copies of row 0 so the closest points are exact duplicates.
        let row0 = data[..d].to_vec();
        for _ in 0..copies {
            data.extend_from_slice(&row0);
        }
        let space = make_space(n + copies, d, data, Metric::Euclidean);
        let r = query(&space, &["x00", "x00"], n + copies, Aggregation::MinDist).unwrap();
        prop_assert!(r.hits.iter().all(|h| h.id != "x00"));
        prop_assert_eq!(r.hits.len(), n + copies - 1);
        prop_assert!(r.hits[..copies].iter().all(|h| h.score == 0.0));
    }

    #[test]
    fn assembly_is_idempotent((n, raw) in graph_strategy(), posters in prop::collection::vec(any::<bool>(), 15)) {
        let name = |i: usize| format!("u{i}");
        let posts: Vec<_> = (0..n).filter(|&i| posters[i]).map(|i| botmatch::ingest::RawPost {
            post_id: format!("p{i}"),
            author_id: name(i),
            author_screen_name: name(i),
            text: format!("hello {i}"),
            retweeted_author_id: None,
            replied_author_id: None,
            mentioned_author_ids: vec![],
            timestamp: None,
        }).collect();
        let edges: Vec<EdgeRecord> = raw.iter().map(|&(s, t, w)| EdgeRecord::new(name(s), name(t), EdgeType::Mention, w)).collect();
        if let Ok((accounts, kept)) = assemble_dataset(&posts, &edges, false) {
            let (again, kept_again) = prune(accounts.clone(), &kept).unwrap();
            prop_assert_eq!(again, accounts);
            prop_assert_eq!(kept_again, kept);
        }
    }

    #[test]
    fn dense_edges_dense_is_identity(n in 2usize..10, cells in prop::collection::vec(0u64..3, 100)) {
        let ids: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
        let dense = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { cells[i * 10 + j] as f64 });
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if dense[(i, j)] > 0.0 {
                    edges.push(EdgeRecord::new(ids[i].clone(), ids[j].clone(), EdgeType::Mention, dense[(i, j)] as u64));
                }
            }
        }
        let g = CommGraph::from_edges(ids, &edges).unwrap();
        prop_assert_eq!(g.dense_adjacency(DEFAULT_DENSE_CAP).unwrap(), dense);
        prop_assert_eq!(g.edge_records(), edges);
    }

    #[test]
    fn symmetrize_is_idempotent((n, raw) in graph_strategy()) {
        let g = graph_from(n, &raw, |i| format!("v{i}"));
        let once = g.symmetrize();
        let twice = once.symmetrize();
        prop_assert_eq!(once.edge_records(), twice.edge_records());
        let a = once.dense_adjacency(DEFAULT_DENSE_CAP).unwrap();
        prop_assert_eq!(a.transpose(), a);
    }

    #[test]
    fn concatenated_rows_have_norm_at_most_one((n, d, data) in space_strategy(), mix in 0.0f64..=1.0) {
        let ids: Vec<String> = (0..n).map(|i| format!("x{i:02}")).collect();
        let a = EmbeddingSpace::new("a", ids.clone(), d, data.clone(), Metric::Cosine, SpaceKind::Content, 0).unwrap();
        let flipped: Vec<f64> = data.iter().rev().copied().collect();
        let b = EmbeddingSpace::new("b", ids, d, flipped, Metric::Cosine, SpaceKind::Network, 0).unwrap();
        let c = concat_spaces(&a, &b, mix).unwrap();
        prop_assert_eq!(c.dim(), 2 * d);
        for i in 0..n {
            let norm = c.row(i).iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!(norm <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn binary_rows_ignore_repetition(docs in prop::collection::vec(prop::collection::vec(0usize..8, 1..10), 2..8), reps in 2usize..4) {
        let docs: Vec<Vec<String>> = docs.iter().map(|d| d.iter().map(|w| format!("t{w}")).collect()).collect();
        let repeated: Vec<Vec<String>> = docs.iter().map(|d| d.iter().flat_map(|t| std::iter::repeat_n(t.clone(), reps)).collect()).collect();
        let vocab = build_vocab(&docs, &EVERYTHING).unwrap();
        prop_assert_eq!(count_matrix(&docs, &vocab, TermWeighting::Binary), count_matrix(&repeated, &vocab, TermWeighting::Binary));
        // Cosine over TF is scale free, so repetition changes nothing there either.
        let ids: Vec<String> = (0..docs.len()).map(|i| format!("d{i}")).collect();
        let plain = DirectSpace::new("c", ids.clone(), count_matrix(&docs, &vocab, TermWeighting::Tf), DirectMeasure::Cosine).unwrap();
        let scaled = DirectSpace::new("c", ids, count_matrix(&repeated, &vocab, TermWeighting::Tf), DirectMeasure::Cosine).unwrap();
        for i in 0..docs.len() {
            for j in 0..docs.len() {
                prop_assert!((plain.similarity(i, j) - scaled.similarity(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cosine_distance_ignores_positive_scale(a in prop::collection::vec(-5.0f64..5.0, 4), b in prop::collection::vec(-5.0f64..5.0, 4), c in 0.01f64..100.0) {
        let scaled: Vec<f64> = b.iter().map(|x| x * c).collect();
        prop_assert!((Metric::Cosine.distance(&a, &b) - Metric::Cosine.distance(&a, &scaled)).abs() < 1e-9);
    }

    #[test]
    fn gibbs_sweeps_conserve_counts(docs in prop::collection::vec(prop::collection::vec(0usize..12, 1..20), 3..10), topics in 1usize..4, seed in any::<u64>()) {
        let docs: Vec<Vec<String>> = docs.iter().map(|d| d.iter().map(|w| format!("t{w}")).collect()).collect();
        let vocab = build_vocab(&docs, &EVERYTHING).unwrap();
        prop_assume!(vocab.len() >= topics);
        let tf = count_matrix(&docs, &vocab, TermWeighting::Tf);
        let total: f64 = (0..tf.n_rows()).map(|i| tf.row_sum(i)).sum();
        let mut model = LdaModel::init(&tf, &LdaConfig { topics, iters: 3, seed, ..Default::default() }).unwrap();
        for _ in 0..3 {
            model.sweep();
            prop_assert_eq!(model.total_tokens(), total as u64);
            let v = model.vocab_size;
            for z in 0..topics {
                let row: u32 = model.topic_word[z * v..(z + 1) * v].iter().sum();
                prop_assert_eq!(row, model.topic_totals[z]);
            }
            for d in 0..tf.n_rows() {
                let row: u32 = model.doc_topic[d * topics..(d + 1) * topics].iter().sum();
                prop_assert_eq!(row, model.doc_lengths[d]);
                prop_assert_eq!(row as f64, tf.row_sum(d));
            }
        }
    }

    #[test]
    fn trust_follows_relabelling((n, raw) in graph_strategy(), perm_seed in any::<u64>(), seed in any::<prop::sample::Index>()) {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(perm_seed));
        let g = graph_from(n, &raw, |i| format!("v{i:02}")).symmetrize();
        let h = graph_from(n, &raw, |i| format!("v{:02}", perm[i])).symmetrize();
        let s = seed.index(n);
        let tg = sybil_rank(&g, &[g.index_of(&format!("v{s:02}")).unwrap()], Some(4)).unwrap();
        let th = sybil_rank(&h, &[h.index_of(&format!("v{:02}", perm[s])).unwrap()], Some(4)).unwrap();
        for i in 0..n {
            let a = tg.trust[g.index_of(&format!("v{i:02}")).unwrap()];
            let b = th.trust[h.index_of(&format!("v{:02}", perm[i])).unwrap()];
            prop_assert!((a - b).abs() < 1e-12);
        }
        prop_assert!((tg.trust.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unit_return_and_in_out_parameters_give_uniform_steps((n, raw) in graph_strategy(), node in any::<prop::sample::Index>()) {
        let g = graph_from(n, &raw, |i| format!("v{i:02}")).symmetrize();
        let v = node.index(n);
        let neighbors = g.neighbors(v);
        prop_assume!(!neighbors.is_empty());
        for previous in std::iter::once(None).chain(neighbors.iter().map(|&(u, _)| Some(u))) {
            let probs = transition_probabilities(&g, previous, v, 1.0, 1.0, false);
            prop_assert_eq!(probs.len(), neighbors.len());
            for (_, p) in probs {
                prop_assert!((p - 1.0 / neighbors.len() as f64).abs() < 1e-12);
            }
        }
    }
}
