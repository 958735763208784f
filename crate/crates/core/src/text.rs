//! Vocabulary and document-term matrices.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::LinearOperator;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VocabConfig {
    pub min_df: usize,
    pub max_df_frac: f64,
    pub max_terms: usize,
}

impl Default for VocabConfig {
    fn default() -> Self {
        VocabConfig { min_df: 2, max_df_frac: 0.8, max_terms: 50_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    df: Vec<usize>,
    n_docs: usize,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn term_id(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn doc_freq(&self, term_id: usize) -> usize {
        self.df[term_id]
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }
}

/// Keep terms whose document frequency lies in `[min_df, max_df_frac * N]`,
/// then the `max_terms` most frequent. Term ids follow descending document
/// frequency with lexicographic tie-breaks.
pub fn build_vocab<S: AsRef<str>>(docs: &[Vec<S>], config: &VocabConfig) -> Result<Vocabulary> {
    if docs.is_empty() {
        return Err(Error::Config("cannot build a vocabulary from zero documents".into()));
    }
    let n = docs.len();
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in docs {
        let mut terms: Vec<&str> = doc.iter().map(AsRef::as_ref).collect();
        terms.sort_unstable();
        terms.dedup();
        for t in terms {
            *df.entry(t).or_default() += 1;
        }
    }
    let mut kept: Vec<(&str, usize)> = df
        .into_iter()
        .filter(|&(_, d)| d >= config.min_df && (d as f64) <= config.max_df_frac * n as f64)
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    kept.truncate(config.max_terms);
    if kept.is_empty() {
        return Err(Error::Config(format!(
            "vocabulary is empty (min_df={}, max_df_frac={}, {} documents)",
            config.min_df, config.max_df_frac, n
        )));
    }
    let terms: Vec<String> = kept.iter().map(|(t, _)| t.to_string()).collect();
    let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    Ok(Vocabulary { terms, index, df: kept.iter().map(|&(_, d)| d).collect(), n_docs: n })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermWeighting {
    Tf,
    TfIdf,
    Binary,
}

/// Sparse N x V matrix in compressed-row form with cached row norms.
#[derive(Debug, Clone, PartialEq)]
pub struct DocTermMatrix {
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
    n_cols: usize,
    norms: Vec<f64>,
    mode: TermWeighting,
}

/// Borrowed sparse row: sorted column indices and their values.
#[derive(Debug, Clone, Copy)]
pub struct SparseRow<'a> {
    pub indices: &'a [usize],
    pub values: &'a [f64],
}

impl SparseRow<'_> {
    pub fn dot(&self, other: &SparseRow<'_>) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < self.indices.len() && j < other.indices.len() {
            match self.indices[i].cmp(&other.indices[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.values[i] * other.values[j];
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Smoothed inverse document frequency, `1 + ln(N / df)`.
pub fn idf(n_docs: usize, df: usize) -> f64 {
    1.0 + (n_docs as f64 / df as f64).ln()
}

/// Count terms of each document against `vocab`; out-of-vocabulary tokens
/// are ignored.
pub fn count_matrix<S: AsRef<str>>(docs: &[Vec<S>], vocab: &Vocabulary, mode: TermWeighting) -> DocTermMatrix {
    let mut indptr = Vec::with_capacity(docs.len() + 1);
    let mut indices = Vec::new();
    let mut values = Vec::new();
    indptr.push(0);
    for doc in docs {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for tok in doc {
            if let Some(t) = vocab.term_id(tok.as_ref()) {
                *counts.entry(t).or_default() += 1.0;
            }
        }
        for (t, c) in counts {
            indices.push(t);
            values.push(match mode {
                TermWeighting::Tf => c,
                TermWeighting::TfIdf => c * idf(vocab.n_docs, vocab.df[t]),
                TermWeighting::Binary => 1.0,
            });
        }
        indptr.push(indices.len());
    }
    let mut m = DocTermMatrix { indptr, indices, values, n_cols: vocab.len(), norms: Vec::new(), mode };
    m.norms = (0..m.n_rows()).map(|i| m.row(i).norm()).collect();
    m
}

impl DocTermMatrix {
    pub fn n_rows(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn mode(&self) -> TermWeighting {
        self.mode
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row(&self, i: usize) -> SparseRow<'_> {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        SparseRow { indices: &self.indices[a..b], values: &self.values[a..b] }
    }

    pub fn row_norm(&self, i: usize) -> f64 {
        self.norms[i]
    }

    /// Sum of the row's entries; the document length in tf mode.
    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).values.iter().sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n_rows(), self.n_cols);
        for i in 0..self.n_rows() {
            let r = self.row(i);
            for (&j, &v) in r.indices.iter().zip(r.values) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Tab-separated `doc_id term_id value` triples.
    pub fn write_tsv<W: Write>(&self, mut out: W, doc_ids: &[String]) -> Result<()> {
        for i in 0..self.n_rows() {
            let r = self.row(i);
            for (&j, &v) in r.indices.iter().zip(r.values) {
                writeln!(out, "{}\t{}\t{}", doc_ids[i], j, v)?;
            }
        }
        Ok(())
    }
}

impl LinearOperator for DocTermMatrix {
    fn nrows(&self) -> usize {
        self.n_rows()
    }

    fn ncols(&self) -> usize {
        self.n_cols
    }

    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut y = DMatrix::zeros(self.n_rows(), x.ncols());
        for i in 0..self.n_rows() {
            let r = self.row(i);
            for c in 0..x.ncols() {
                let mut acc = 0.0;
                for (&j, &v) in r.indices.iter().zip(r.values) {
                    acc += v * x[(j, c)];
                }
                y[(i, c)] = acc;
            }
        }
        y
    }

    fn apply_transpose(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut y = DMatrix::zeros(self.n_cols, x.ncols());
        for i in 0..self.n_rows() {
            let r = self.row(i);
            for c in 0..x.ncols() {
                let xi = x[(i, c)];
                for (&j, &v) in r.indices.iter().zip(r.values) {
                    y[(j, c)] += v * xi;
                }
            }
        }
        y
    }

    fn to_dense(&self) -> DMatrix<f64> {
        DocTermMatrix::to_dense(self)
    }
}
