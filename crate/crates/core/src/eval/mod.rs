//! Precision-at-k evaluation, synthetic benchmarks and 2-D projection.
//!
//! Every positively labeled account is used once as a single seed; the
//! precision of its `k` nearest neighbors is the share of positives among
//! them. The report averages over all positive seeds.

pub mod project;
pub mod synth;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::knn::{query, Aggregation, SearchSpace};

pub use project::{project_2d, write_projection_csv, Projection, ProjectionMethod, TsneConfig};
pub use synth::{gen_planted_graph, gen_posts, gen_topic_corpus, PlantedGraph};

/// Binary account labels; `true` marks the positive (bot) class.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSet {
    labels: BTreeMap<String, bool>,
}

impl LabelSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: impl Into<String>, positive: bool) {
        self.labels.insert(id.into(), positive);
    }

    pub fn get(&self, id: &str) -> Option<bool> {
        self.labels.get(id).copied()
    }

    /// Unlabeled accounts count as negative.
    pub fn is_positive(&self, id: &str) -> bool {
        self.get(id).unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn positive_count(&self) -> usize {
        self.labels.values().filter(|&&p| p).count()
    }

    /// Positive ids in ascending order.
    pub fn positives(&self) -> Vec<&str> {
        self.labels.iter().filter(|(_, &p)| p).map(|(id, _)| id.as_str()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, bool)> {
        self.labels.iter().map(|(id, &p)| (id.as_str(), p))
    }

    /// Keep only labels for the given node set.
    pub fn restrict<S: AsRef<str>>(&self, ids: &[S]) -> LabelSet {
        let labels = ids
            .iter()
            .filter_map(|id| self.labels.get_key_value(id.as_ref()).map(|(k, &v)| (k.clone(), v)))
            .collect();
        LabelSet { labels }
    }

    /// CSV with header `account_id,label`; labels are `1`/`0` (also
    /// `true`/`false`).
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(input);
        let mut out = LabelSet::new();
        for (i, row) in reader.records().enumerate() {
            let row = row?;
            if row.len() < 2 {
                return Err(Error::Format(format!("label row {} has {} columns", i + 1, row.len())));
            }
            let positive = match row[1].trim() {
                "1" | "true" => true,
                "0" | "false" => false,
                other => return Err(Error::Format(format!("label row {}: bad label '{other}'", i + 1))),
            };
            out.insert(row[0].trim(), positive);
        }
        Ok(out)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["account_id", "label"])?;
        for (id, &p) in &self.labels {
            w.write_record([id.as_str(), if p { "1" } else { "0" }])?;
        }
        w.flush()?;
        Ok(())
    }
}

impl<S: Into<String>> FromIterator<(S, bool)> for LabelSet {
    fn from_iter<I: IntoIterator<Item = (S, bool)>>(iter: I) -> Self {
        LabelSet { labels: iter.into_iter().map(|(id, p)| (id.into(), p)).collect() }
    }
}

/// Positive share among the candidates of a single-seed query, `P/(N-1)`.
pub fn random_baseline(n: usize, positives: usize) -> f64 {
    if n < 2 {
        return 0.0;
    }
    positives as f64 / (n - 1) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedPrecision {
    pub seed: String,
    pub positives: usize,
    pub precision: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionAtK {
    pub k: usize,
    pub mean: f64,
    pub per_seed: Vec<SeedPrecision>,
}

/// Single-seed queries from every positive account present in `space`.
pub fn precision_at_k(space: &SearchSpace, labels: &LabelSet, k: usize) -> Result<PrecisionAtK> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let seeds: Vec<&str> = labels.positives().into_iter().filter(|id| space.index_of(id).is_some()).collect();
    if seeds.is_empty() {
        return Err(Error::Evaluation(format!("no positive labels among the accounts of '{}'", space.name())));
    }
    let per_seed = seeds
        .par_iter()
        .map(|&seed| {
            let result = query(space, &[seed], k, Aggregation::Mean)?;
            let positives = result.hits.iter().filter(|h| labels.is_positive(&h.id)).count();
            Ok(SeedPrecision { seed: seed.to_string(), positives, precision: positives as f64 / k as f64 })
        })
        .collect::<Result<Vec<_>>>()?;
    let total: usize = per_seed.iter().map(|s| s.positives).sum();
    let mean = total as f64 / (per_seed.len() * k) as f64;
    Ok(PrecisionAtK { k, mean, per_seed })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub space: String,
    pub kind: String,
    pub accounts: usize,
    pub positives: usize,
    pub ks: Vec<usize>,
    pub p_at: BTreeMap<usize, f64>,
    pub random_baseline: f64,
    pub per_seed: BTreeMap<usize, Vec<SeedPrecision>>,
}

/// Precision at every `k` in `ks` plus the random baseline. Labels for
/// accounts missing from the space are ignored.
pub fn evaluate(space: &SearchSpace, labels: &LabelSet, ks: &[usize]) -> Result<EvalReport> {
    if ks.is_empty() {
        return Err(Error::InvalidArgument("at least one k is required".into()));
    }
    let labels = labels.restrict(space.ids());
    let mut p_at = BTreeMap::new();
    let mut per_seed = BTreeMap::new();
    for &k in ks {
        let r = precision_at_k(space, &labels, k)?;
        p_at.insert(k, r.mean);
        per_seed.insert(k, r.per_seed);
    }
    let positives = labels.positive_count();
    Ok(EvalReport {
        space: space.name().to_string(),
        kind: space.kind_label().to_string(),
        accounts: space.len(),
        positives,
        ks: ks.to_vec(),
        p_at,
        random_baseline: random_baseline(space.len(), positives),
        per_seed,
    })
}

/// Aligned text table: one row per space, one column per k, random
/// baseline as the last row.
pub fn render_table(reports: &[EvalReport]) -> String {
    let mut ks: Vec<usize> = reports.iter().flat_map(|r| r.ks.iter().copied()).collect();
    ks.sort_unstable();
    ks.dedup();
    let baseline = reports.first().map(|r| r.random_baseline);
    let name_width = reports.iter().map(|r| r.space.len()).chain(["Random Baseline".len(), "Model".len()]).max().unwrap_or(5);
    let mut out = String::new();
    let _ = write!(out, "{:<name_width$}", "Model");
    for k in &ks {
        let _ = write!(out, "  {:>7}", format!("p@{k}"));
    }
    out.push('\n');
    for r in reports {
        let _ = write!(out, "{:<name_width$}", r.space);
        for k in &ks {
            match r.p_at.get(k) {
                Some(p) => {
                    let _ = write!(out, "  {p:>7.3}");
                }
                None => {
                    let _ = write!(out, "  {:>7}", "-");
                }
            }
        }
        out.push('\n');
    }
    if let Some(b) = baseline {
        let _ = write!(out, "{:<name_width$}", "Random Baseline");
        for _ in &ks {
            let _ = write!(out, "  {b:>7.3}");
        }
        out.push('\n');
    }
    out
}

/// Area under the ROC curve for `scores` (higher means more positive),
/// counting ties as half.
pub fn roc_auc(scores: &[f64], positive: &[bool]) -> Result<f64> {
    if scores.len() != positive.len() {
        return Err(Error::Alignment(format!("{} scores for {} labels", scores.len(), positive.len())));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += order[i..=j].iter().filter(|&&v| positive[v]).count() as f64 * avg_rank;
        i = j + 1;
    }
    let p = positive.iter().filter(|&&x| x).count() as f64;
    let n = scores.len() as f64 - p;
    if p == 0.0 || n == 0.0 {
        return Err(Error::Evaluation("AUC needs both classes".into()));
    }
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}
