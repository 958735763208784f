//! On-disk dataset directory and model construction.
//!
//! ```text
//! <dir>/accounts.jsonl   one AccountRecord per line, sorted by id
//! <dir>/edges.csv        source,target,type,weight
//! <dir>/graph.bmg        binary graph snapshot
//! <dir>/labels.csv       account_id,label (optional)
//! <dir>/spaces/*.bme     embedding spaces
//! ```
//!
//! Loading also registers three spaces that need no training: `jaccard`
//! and `cosine` over the account texts and `sybilrank`, which propagates
//! trust from the query seeds.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::content::{lda_fit, lsa_fit, LdaConfig};
use crate::embedding::{EmbeddingSpace, Metric, SpaceKind};
use crate::error::{Error, Result};
use crate::eval::LabelSet;
use crate::fusion::{concat_spaces, warm_start_factorize};
use crate::graph::{CommGraph, DEFAULT_DENSE_CAP};
use crate::ingest::{read_edges_csv, write_edges_csv, AccountRecord, EdgeRecord};
use crate::knn::{DirectMeasure, DirectSpace, PropagationSpace, SearchSpace};
use crate::network::{
    graph_factorize, hope_embed, node2vec_embed, role2vec_embed, sybil_rank_space, FactorizeConfig, HopeConfig,
    Node2VecConfig, Role2VecConfig, SkipGramConfig, WalkConfig,
};
use crate::text::{build_vocab, count_matrix, DocTermMatrix, TermWeighting, VocabConfig};

pub const ACCOUNTS_FILE: &str = "accounts.jsonl";
pub const EDGES_FILE: &str = "edges.csv";
pub const GRAPH_FILE: &str = "graph.bmg";
pub const LABELS_FILE: &str = "labels.csv";
pub const SPACES_DIR: &str = "spaces";

/// Every model name the pipeline can build.
pub const MODEL_NAMES: &[&str] =
    &["jaccard", "cosine", "lda", "lsa", "node2vec", "hope", "gf", "role2vec", "sybilrank", "warmstart", "concat"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Jaccard,
    Cosine,
    Lda,
    Lsa,
    Node2vec,
    Hope,
    Gf,
    Role2vec,
    Sybilrank,
    Warmstart,
    Concat,
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "jaccard" => Model::Jaccard,
            "cosine" => Model::Cosine,
            "lda" => Model::Lda,
            "lsa" => Model::Lsa,
            "node2vec" => Model::Node2vec,
            "hope" => Model::Hope,
            "gf" => Model::Gf,
            "role2vec" => Model::Role2vec,
            "sybilrank" => Model::Sybilrank,
            "warmstart" => Model::Warmstart,
            "concat" => Model::Concat,
            other => {
                return Err(Error::Config(format!("unknown model '{other}' (expected one of {})", MODEL_NAMES.join(", "))))
            }
        })
    }
}

/// Hyperparameters for [`build_space`]. `None` picks each model's default.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub dim: Option<usize>,
    pub seed: u64,
    pub topics: usize,
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iters: usize,
    pub lda_metric: Metric,
    pub walks: WalkConfig,
    pub window: usize,
    pub negatives: usize,
    pub epochs: Option<usize>,
    pub lr: Option<f64>,
    pub lambda: f64,
    pub katz_alpha: Option<f64>,
    pub wl_iters: usize,
    pub mix: f64,
    /// Content space used by `warmstart` and `concat`.
    pub content: String,
    /// Network space used by `concat`.
    pub network: String,
    /// Seeds for a stored `sybilrank` ranking.
    pub seeds: Vec<String>,
    pub vocab: VocabConfig,
}

impl Default for ModelParams {
    fn default() -> Self {
        let lda = LdaConfig::default();
        let sg = SkipGramConfig::default();
        ModelParams {
            dim: None,
            seed: 0,
            topics: lda.topics,
            alpha: None,
            beta: lda.beta,
            iters: lda.iters,
            lda_metric: Metric::Cosine,
            walks: WalkConfig::default(),
            window: sg.window,
            negatives: sg.negatives,
            epochs: None,
            lr: None,
            lambda: FactorizeConfig::default().lambda,
            katz_alpha: None,
            wl_iters: 2,
            mix: 0.5,
            content: "lda".into(),
            network: "node2vec".into(),
            seeds: Vec::new(),
            vocab: VocabConfig::default(),
        }
    }
}

impl ModelParams {
    pub fn skipgram(&self, default_dim: usize) -> SkipGramConfig {
        let d = SkipGramConfig::default();
        SkipGramConfig {
            dim: self.dim.unwrap_or(default_dim),
            window: self.window,
            negatives: self.negatives,
            epochs: self.epochs.unwrap_or(d.epochs),
            lr: self.lr.unwrap_or(d.lr),
            seed: self.seed,
        }
    }

    pub fn walk_config(&self) -> WalkConfig {
        WalkConfig { seed: self.seed, ..self.walks }
    }

    pub fn lda(&self) -> LdaConfig {
        LdaConfig { topics: self.topics, alpha: self.alpha, beta: self.beta, iters: self.iters, seed: self.seed }
    }

    pub fn factorize(&self) -> FactorizeConfig {
        let d = FactorizeConfig::default();
        FactorizeConfig {
            dim: self.dim.unwrap_or(d.dim),
            lambda: self.lambda,
            lr: self.lr.unwrap_or(d.lr),
            epochs: self.epochs.unwrap_or(d.epochs),
            seed: self.seed,
        }
    }
}

/// Document-term matrix over account texts in graph order.
pub fn account_matrix(docs: &[Vec<String>], vocab: &VocabConfig, mode: TermWeighting) -> Result<DocTermMatrix> {
    let v = build_vocab(docs, vocab)?;
    Ok(count_matrix(docs, &v, mode))
}

/// A loaded dataset with its searchable spaces.
#[derive(Debug, Clone)]
pub struct Dataset {
    name: String,
    dir: PathBuf,
    accounts: Vec<AccountRecord>,
    graph: CommGraph,
    labels: Option<LabelSet>,
    spaces: BTreeMap<String, Arc<SearchSpace>>,
}

impl Dataset {
    /// Build an in-memory dataset; accounts and graph nodes must coincide.
    pub fn from_parts(
        name: impl Into<String>,
        dir: impl Into<PathBuf>,
        mut accounts: Vec<AccountRecord>,
        edges: &[EdgeRecord],
        labels: Option<LabelSet>,
    ) -> Result<Self> {
        accounts.sort_by(|a, b| a.account_id.cmp(&b.account_id));
        let graph = CommGraph::from_edges(accounts.iter().map(|a| a.account_id.clone()), edges)?;
        let mut ds = Dataset { name: name.into(), dir: dir.into(), accounts, graph, labels, spaces: BTreeMap::new() };
        ds.add_builtin_spaces(&VocabConfig::default());
        Ok(ds)
    }

    /// Write accounts, edges, graph snapshot and labels into `dir`.
    pub fn write_files(dir: &Path, accounts: &[AccountRecord], edges: &[EdgeRecord], labels: Option<&LabelSet>) -> Result<()> {
        fs::create_dir_all(dir.join(SPACES_DIR))?;
        let mut sorted: Vec<&AccountRecord> = accounts.iter().collect();
        sorted.sort_by(|a, b| a.account_id.cmp(&b.account_id));
        let mut out = BufWriter::new(File::create(dir.join(ACCOUNTS_FILE))?);
        for a in sorted {
            serde_json::to_writer(&mut out, a)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        write_edges_csv(BufWriter::new(File::create(dir.join(EDGES_FILE))?), edges)?;
        let graph = CommGraph::from_edges(accounts.iter().map(|a| a.account_id.clone()), edges)?;
        let mut g = BufWriter::new(File::create(dir.join(GRAPH_FILE))?);
        graph.write_snapshot(&mut g)?;
        g.flush()?;
        if let Some(l) = labels {
            l.write_csv(BufWriter::new(File::create(dir.join(LABELS_FILE))?))?;
        }
        Ok(())
    }

    /// Load a dataset directory; its name is the directory name.
    pub fn load(dir: &Path) -> Result<Self> {
        let name = dir
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| Error::Dataset(format!("bad dataset path {}", dir.display())))?
            .to_string();
        let accounts_path = dir.join(ACCOUNTS_FILE);
        let file = File::open(&accounts_path)
            .map_err(|e| Error::Dataset(format!("cannot open {}: {e}", accounts_path.display())))?;
        let mut accounts = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: AccountRecord = serde_json::from_str(&line)
                .map_err(|e| Error::Format(format!("{} line {}: {e}", accounts_path.display(), i + 1)))?;
            accounts.push(rec);
        }
        let edges_path = dir.join(EDGES_FILE);
        let edges = read_edges_csv(
            File::open(&edges_path).map_err(|e| Error::Dataset(format!("cannot open {}: {e}", edges_path.display())))?,
        )?;
        let labels_path = dir.join(LABELS_FILE);
        let labels = if labels_path.exists() { Some(LabelSet::read_csv(File::open(labels_path)?)?) } else { None };
        let mut ds = Dataset::from_parts(name, dir, accounts, &edges, labels)?;
        let spaces_dir = dir.join(SPACES_DIR);
        if spaces_dir.is_dir() {
            let mut paths: Vec<PathBuf> = fs::read_dir(&spaces_dir)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "bme"))
                .collect();
            paths.sort();
            for p in paths {
                let space = EmbeddingSpace::read(BufReader::new(File::open(&p)?))
                    .map_err(|e| Error::Format(format!("{}: {e}", p.display())))?;
                ds.insert_space(SearchSpace::Vectors(space));
            }
        }
        Ok(ds)
    }

    fn add_builtin_spaces(&mut self, vocab: &VocabConfig) {
        let docs = self.docs();
        let ids = self.graph.ids().to_vec();
        if let Ok(m) = account_matrix(&docs, vocab, TermWeighting::Binary) {
            if let Ok(s) = DirectSpace::new("jaccard", ids.clone(), m, DirectMeasure::Jaccard) {
                self.insert_space(SearchSpace::Direct(s));
            }
        }
        if let Ok(m) = account_matrix(&docs, vocab, TermWeighting::TfIdf) {
            if let Ok(s) = DirectSpace::new("cosine", ids, m, DirectMeasure::Cosine) {
                self.insert_space(SearchSpace::Direct(s));
            }
        }
        self.insert_space(SearchSpace::Propagation(PropagationSpace::new("sybilrank", &self.graph, None)));
    }

    /// Register a space, replacing any space with the same name.
    pub fn insert_space(&mut self, space: SearchSpace) {
        self.spaces.insert(space.name().to_string(), Arc::new(space));
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn graph(&self) -> &CommGraph {
        &self.graph
    }

    pub fn accounts(&self) -> &[AccountRecord] {
        &self.accounts
    }

    pub fn account(&self, id: &str) -> Option<&AccountRecord> {
        self.graph.index_of(id).map(|i| &self.accounts[i])
    }

    pub fn labels(&self) -> Option<&LabelSet> {
        self.labels.as_ref()
    }

    /// Cleaned token lists in graph node order.
    pub fn docs(&self) -> Vec<Vec<String>> {
        self.accounts.iter().map(|a| a.clean_text.clone()).collect()
    }

    pub fn space_names(&self) -> Vec<&str> {
        self.spaces.keys().map(String::as_str).collect()
    }

    pub fn spaces(&self) -> impl Iterator<Item = &Arc<SearchSpace>> {
        self.spaces.values()
    }

    pub fn space(&self, name: &str) -> Result<&Arc<SearchSpace>> {
        self.spaces.get(name).ok_or_else(|| Error::UnknownSpace(name.to_string()))
    }

    pub fn vector_space(&self, name: &str) -> Result<&EmbeddingSpace> {
        match self.space(name)?.as_ref() {
            SearchSpace::Vectors(s) => Ok(s),
            _ => Err(Error::InvalidArgument(format!("space '{name}' has no stored vectors"))),
        }
    }

    /// Write `space` to `spaces/<name>.bme` and register it.
    pub fn save_space(&mut self, space: EmbeddingSpace) -> Result<PathBuf> {
        let dir = self.dir.join(SPACES_DIR);
        fs::create_dir_all(&dir)?;
        let path = dir.join(format!("{}.bme", space.name()));
        let mut out = BufWriter::new(File::create(&path)?);
        space.write(&mut out)?;
        out.flush()?;
        self.insert_space(SearchSpace::Vectors(space));
        Ok(path)
    }
}

/// Train `model` on `dataset`. `jaccard`, `cosine` and seedless
/// `sybilrank` return the built-in space.
pub fn build_space(dataset: &Dataset, model: Model, params: &ModelParams) -> Result<SearchSpace> {
    let graph = dataset.graph();
    let ids = graph.ids();
    Ok(match model {
        Model::Jaccard | Model::Cosine => {
            let (mode, measure, name) = match model {
                Model::Jaccard => (TermWeighting::Binary, DirectMeasure::Jaccard, "jaccard"),
                _ => (TermWeighting::TfIdf, DirectMeasure::Cosine, "cosine"),
            };
            let m = account_matrix(&dataset.docs(), &params.vocab, mode)?;
            SearchSpace::Direct(DirectSpace::new(name, ids.to_vec(), m, measure)?)
        }
        Model::Lda => {
            let m = account_matrix(&dataset.docs(), &params.vocab, TermWeighting::Tf)?;
            SearchSpace::Vectors(lda_fit(&m, ids, &params.lda(), params.lda_metric)?.1)
        }
        Model::Lsa => {
            let m = account_matrix(&dataset.docs(), &params.vocab, TermWeighting::TfIdf)?;
            SearchSpace::Vectors(lsa_fit(&m, ids, params.dim.unwrap_or(100), params.seed)?)
        }
        Model::Node2vec => {
            let cfg = Node2VecConfig { walks: params.walk_config(), skipgram: params.skipgram(64) };
            SearchSpace::Vectors(node2vec_embed(graph, &cfg)?)
        }
        Model::Hope => {
            let cfg = HopeConfig {
                dim: params.dim.unwrap_or(128),
                alpha: params.katz_alpha,
                seed: params.seed,
                dense_cap: DEFAULT_DENSE_CAP,
            };
            SearchSpace::Vectors(hope_embed(graph, &cfg)?.0)
        }
        Model::Gf => SearchSpace::Vectors(graph_factorize(graph, &params.factorize())?.0),
        Model::Role2vec => {
            let cfg = Role2VecConfig {
                wl_iters: params.wl_iters,
                walks: params.walk_config(),
                skipgram: params.skipgram(128),
                ..Default::default()
            };
            SearchSpace::Vectors(role2vec_embed(graph, &cfg)?.0)
        }
        Model::Sybilrank => {
            if params.seeds.is_empty() {
                SearchSpace::Propagation(PropagationSpace::new("sybilrank", graph, None))
            } else {
                let seeds: Vec<&str> = params.seeds.iter().map(String::as_str).collect();
                SearchSpace::Vectors(sybil_rank_space(graph, &seeds, None)?)
            }
        }
        Model::Warmstart => {
            let content = dataset.vector_space(&params.content)?;
            if content.kind() != SpaceKind::Content {
                return Err(Error::Config(format!("warm start needs a content space, '{}' is {}", params.content, content.kind())));
            }
            SearchSpace::Vectors(warm_start_factorize(graph, content, &params.factorize())?.0)
        }
        Model::Concat => {
            let a = dataset.vector_space(&params.content)?;
            let b = dataset.vector_space(&params.network)?;
            SearchSpace::Vectors(concat_spaces(a, b, params.mix)?)
        }
    })
}
