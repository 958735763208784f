//! Content-side similarity and embedding models.
//!
//! Jaccard and cosine work directly on document-term rows and produce no
//! vectors; LDA yields per-document topic proportions and LSA a truncated
//! SVD of the TF-IDF matrix.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embedding::{EmbeddingSpace, Metric, SpaceKind};
use crate::error::{Error, Result};
use crate::linalg::{truncated_svd, SvdOptions};
use crate::text::{DocTermMatrix, SparseRow, TermWeighting};

/// `|a ∩ b| / |a ∪ b|` over sorted, deduplicated id slices. Two empty sets
/// have similarity 0.
pub fn jaccard_similarity(a: &[usize], b: &[usize]) -> f64 {
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Cosine similarity of two sparse rows; zero rows give 0.
pub fn cosine_similarity(a: &SparseRow<'_>, b: &SparseRow<'_>) -> f64 {
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        a.dot(b) / (na * nb)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdaConfig {
    pub topics: usize,
    /// Document-topic prior; `None` means `50 / topics`.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iters: usize,
    pub seed: u64,
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig { topics: 200, alpha: None, beta: 0.01, iters: 500, seed: 0 }
    }
}

impl LdaConfig {
    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.topics as f64)
    }
}

/// Collapsed Gibbs sampler state.
#[derive(Debug, Clone)]
pub struct LdaModel {
    pub topics: usize,
    pub vocab_size: usize,
    pub alpha: f64,
    pub beta: f64,
    /// K x V, row-major.
    pub topic_word: Vec<u32>,
    pub topic_totals: Vec<u32>,
    /// N x K, row-major.
    pub doc_topic: Vec<u32>,
    pub doc_lengths: Vec<u32>,
    /// Per document, the (word, topic) of every token.
    pub tokens: Vec<Vec<(u32, u32)>>,
    rng: ChaCha8Rng,
    probs: Vec<f64>,
}

impl LdaModel {
    /// Expand a term-frequency matrix into tokens and assign topics uniformly
    /// at random.
    pub fn init(dtm: &DocTermMatrix, config: &LdaConfig) -> Result<Self> {
        if dtm.mode() != TermWeighting::Tf {
            return Err(Error::Mode(format!("LDA needs raw term frequencies, got {:?}", dtm.mode())));
        }
        let k = config.topics;
        let v = dtm.n_cols();
        if k == 0 {
            return Err(Error::Config("LDA needs at least one topic".into()));
        }
        if k > v {
            return Err(Error::Config(format!("{k} topics exceed the vocabulary size {v}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let n = dtm.n_rows();
        let mut model = LdaModel {
            topics: k,
            vocab_size: v,
            alpha: config.alpha(),
            beta: config.beta,
            topic_word: vec![0; k * v],
            topic_totals: vec![0; k],
            doc_topic: vec![0; n * k],
            doc_lengths: vec![0; n],
            tokens: Vec::with_capacity(n),
            rng: ChaCha8Rng::seed_from_u64(0),
            probs: vec![0.0; k],
        };
        for d in 0..n {
            let row = dtm.row(d);
            let mut toks = Vec::new();
            for (&w, &c) in row.indices.iter().zip(row.values) {
                for _ in 0..c.round() as usize {
                    let z = rng.random_range(0..k);
                    toks.push((w as u32, z as u32));
                    model.topic_word[z * v + w] += 1;
                    model.topic_totals[z] += 1;
                    model.doc_topic[d * k + z] += 1;
                }
            }
            model.doc_lengths[d] = toks.len() as u32;
            model.tokens.push(toks);
        }
        model.rng = rng;
        Ok(model)
    }

    /// One full Gibbs sweep over every token.
    pub fn sweep(&mut self) {
        let (k, v) = (self.topics, self.vocab_size);
        let vbeta = v as f64 * self.beta;
        for d in 0..self.tokens.len() {
            for t in 0..self.tokens[d].len() {
                let (w, old) = self.tokens[d][t];
                let (w, old) = (w as usize, old as usize);
                self.topic_word[old * v + w] -= 1;
                self.topic_totals[old] -= 1;
                self.doc_topic[d * k + old] -= 1;

                let mut total = 0.0;
                for z in 0..k {
                    let p = (self.doc_topic[d * k + z] as f64 + self.alpha)
                        * (self.topic_word[z * v + w] as f64 + self.beta)
                        / (self.topic_totals[z] as f64 + vbeta);
                    total += p;
                    self.probs[z] = total;
                }
                let u = self.rng.random::<f64>() * total;
                let new = self.probs.iter().position(|&c| u < c).unwrap_or(k - 1);

                self.topic_word[new * v + w] += 1;
                self.topic_totals[new] += 1;
                self.doc_topic[d * k + new] += 1;
                self.tokens[d][t].1 = new as u32;
            }
        }
    }

    pub fn total_tokens(&self) -> u64 {
        self.topic_totals.iter().map(|&c| c as u64).sum()
    }

    /// `theta[d][k] = (n_dk + alpha) / (len_d + K alpha)`
    pub fn theta(&self) -> DMatrix<f64> {
        let k = self.topics;
        DMatrix::from_fn(self.doc_lengths.len(), k, |d, z| {
            (self.doc_topic[d * k + z] as f64 + self.alpha) / (self.doc_lengths[d] as f64 + k as f64 * self.alpha)
        })
    }
}

/// Fit LDA by collapsed Gibbs sampling and return topic proportions as a
/// content space.
pub fn lda_fit(
    dtm: &DocTermMatrix,
    ids: &[String],
    config: &LdaConfig,
    metric: Metric,
) -> Result<(LdaModel, EmbeddingSpace)> {
    if ids.len() != dtm.n_rows() {
        return Err(Error::Alignment(format!("{} ids for {} documents", ids.len(), dtm.n_rows())));
    }
    let mut model = LdaModel::init(dtm, config)?;
    for _ in 0..config.iters {
        model.sweep();
    }
    let space = EmbeddingSpace::from_matrix("lda", ids.to_vec(), &model.theta(), metric, SpaceKind::Content, config.seed)?;
    Ok((model, space))
}

/// Rows of `U_D Σ_D` from the truncated SVD of a TF-IDF matrix.
pub fn lsa_fit(dtm: &DocTermMatrix, ids: &[String], dim: usize, seed: u64) -> Result<EmbeddingSpace> {
    if dtm.mode() != TermWeighting::TfIdf {
        return Err(Error::Mode(format!("LSA needs a TF-IDF matrix, got {:?}", dtm.mode())));
    }
    if ids.len() != dtm.n_rows() {
        return Err(Error::Alignment(format!("{} ids for {} documents", ids.len(), dtm.n_rows())));
    }
    let full = dtm.n_rows().min(dtm.n_cols());
    if dim == 0 || dim > full {
        return Err(Error::Config(format!("LSA dimension {dim} must lie in 1..={full}")));
    }
    let svd = truncated_svd(dtm, dim, &SvdOptions { seed, ..Default::default() })?;
    let mut rows = svd.u;
    for (j, s) in svd.singular_values.iter().enumerate() {
        rows.column_mut(j).scale_mut(*s);
    }
    EmbeddingSpace::from_matrix("lsa", ids.to_vec(), &rows, Metric::Cosine, SpaceKind::Content, seed)
}
