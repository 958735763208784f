//! Command-line entry points.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 numeric or training error. Progress goes to stderr, results to stdout
//! or `--out`.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dataset::{build_space, account_matrix, Dataset, Model, ModelParams};
use crate::embedding::Metric;
use crate::error::{Error, Result};
use crate::eval::{
    evaluate, gen_planted_graph, gen_posts, gen_topic_corpus, project_2d, render_table, write_projection_csv, LabelSet,
    ProjectionMethod, TsneConfig,
};
use crate::ingest::{
    assemble_dataset, assemble_from_csv_corpus, build_edges, parse_posts, post_to_json, read_edges_csv,
    read_node_text_csv, write_posts_csv, PostFormat,
};
use crate::knn::{query, recursive_expand, Aggregation, SearchSpace};
use crate::network::WalkConfig;
use crate::randstring::{gen_benchmark, predict_batch, train, LogisticModel, TrainConfig};
use crate::service::{serve, ServiceConfig};
use crate::text::{TermWeighting, VocabConfig};

#[derive(Debug, Parser)]
#[command(name = "botmatch", version, about = "Find accounts similar to known bots by content, network or both")]
pub struct Cli {
    /// TOML file of `key = value` pairs applied as flags; explicit flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for parallel stages.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    /// Accepted for clarity; every stage is deterministic for a fixed seed.
    #[arg(long, global = true)]
    pub deterministic: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse posts into a dataset directory.
    #[command(args_override_self = true)]
    Ingest(IngestArgs),
    /// Train an embedding model and store its space in the dataset.
    #[command(args_override_self = true)]
    Embed(EmbedArgs),
    /// Nearest neighbors of a seed set.
    #[command(args_override_self = true)]
    Query(QueryArgs),
    /// Recursive nearest-neighbor expansion from seeds.
    #[command(args_override_self = true)]
    Expand(ExpandArgs),
    /// Precision at k for one or more spaces.
    #[command(args_override_self = true)]
    Eval(EvalArgs),
    /// Two-dimensional projection as CSV.
    #[command(args_override_self = true)]
    Project(ProjectArgs),
    /// Random screen-name detector.
    #[command(subcommand)]
    Randstring(RandstringCommand),
    /// Generate synthetic benchmark data.
    #[command(args_override_self = true)]
    Gen(GenArgs),
    /// Run the HTTP service.
    #[command(args_override_self = true)]
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum InputFormat {
    Jsonl,
    Csv,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Post file (JSON lines or flat CSV).
    #[arg(long, required_unless_present = "edges")]
    pub input: Option<PathBuf>,
    /// Post format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<InputFormat>,
    /// Generic corpus: edge list `source,target,type,weight`.
    #[arg(long, requires = "texts", conflicts_with = "input")]
    pub edges: Option<PathBuf>,
    /// Generic corpus: `node_id,text`.
    #[arg(long)]
    pub texts: Option<PathBuf>,
    /// Labels `account_id,label` copied into the dataset.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Remove hashtags and mentions from the cleaned text.
    #[arg(long)]
    pub strip_tags: bool,
    /// Dataset directory to create.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// jaccard, cosine, lda, lsa, node2vec, hope, gf, role2vec, sybilrank, warmstart or concat.
    #[arg(long)]
    pub model: String,
    /// Store the space under this name instead of the model name.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long, default_value_t = 200)]
    pub topics: usize,
    /// LDA document-topic prior; defaults to 50 / topics.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    pub beta: f64,
    /// LDA Gibbs sweeps.
    #[arg(long, default_value_t = 500)]
    pub iters: usize,
    /// Metric of the LDA space: cosine or hellinger.
    #[arg(long, default_value = "cosine")]
    pub lda_metric: String,
    #[arg(long, default_value_t = 10)]
    pub walks_per_node: usize,
    #[arg(long, default_value_t = 80)]
    pub walk_length: usize,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    #[arg(long)]
    pub weighted: bool,
    #[arg(long, default_value_t = 10)]
    pub window: usize,
    #[arg(long, default_value_t = 5)]
    pub negatives: usize,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    pub lambda: f64,
    /// Katz decay; defaults to half the inverse spectral-radius bound.
    #[arg(long)]
    pub katz_alpha: Option<f64>,
    #[arg(long, default_value_t = 2)]
    pub wl_iters: usize,
    /// Weight of the content half in `concat`.
    #[arg(long, default_value_t = 0.5)]
    pub mix: f64,
    /// Content space for warmstart and concat.
    #[arg(long, default_value = "lda")]
    pub content: String,
    /// Network space for concat.
    #[arg(long, default_value = "node2vec")]
    pub network: String,
    /// Seeds for a stored sybilrank ranking, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<String>,
    #[arg(long, default_value_t = 2)]
    pub min_df: usize,
    #[arg(long, default_value_t = 0.8)]
    pub max_df_frac: f64,
    #[arg(long, default_value_t = 50_000)]
    pub max_terms: usize,
    /// Write the space here instead of into the dataset.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub space: String,
    #[arg(long, value_delimiter = ',', required = true)]
    pub seeds: Vec<String>,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value = "mean")]
    pub aggregation: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AcceptRule {
    /// Every hit seeds the next hop.
    All,
    /// Only hits labeled positive seed the next hop.
    Labels,
}

#[derive(Debug, Args)]
pub struct ExpandArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub space: String,
    #[arg(long, value_delimiter = ',', required = true)]
    pub seeds: Vec<String>,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 2)]
    pub hops: usize,
    #[arg(long, default_value = "mean")]
    pub aggregation: String,
    #[arg(long, value_enum, default_value_t = AcceptRule::All)]
    pub accept: AcceptRule,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Spaces to evaluate, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub space: Vec<String>,
    /// Labels file; defaults to the dataset's labels.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = [10, 50])]
    pub k: Vec<usize>,
    /// Emit JSON reports instead of the text table.
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub space: String,
    #[arg(long, default_value = "pca")]
    pub method: String,
    #[arg(long, default_value_t = 30.0)]
    pub perplexity: f64,
    #[arg(long, default_value_t = 1000)]
    pub iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum RandstringCommand {
    /// Train on name lists (one per line) or on the synthetic benchmark.
    #[command(args_override_self = true)]
    Train(RandTrainArgs),
    /// Score names read one per line; writes `name,probability`.
    #[command(args_override_self = true)]
    Predict(RandPredictArgs),
}

#[derive(Debug, Args)]
pub struct RandTrainArgs {
    #[arg(long, requires = "negatives")]
    pub positives: Option<PathBuf>,
    #[arg(long)]
    pub negatives: Option<PathBuf>,
    /// Benchmark size per class when no name lists are given.
    #[arg(long, default_value_t = 10_000)]
    pub benchmark: usize,
    #[arg(long, default_value_t = 0.5)]
    pub lr: f64,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub l2: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RandPredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Names file; stdin when omitted.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GenKind {
    /// Planted communities rendered as posts plus labels.
    Planted,
    /// Labeled random and dictionary screen names.
    Names,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum, default_value_t = GenKind::Planted)]
    pub kind: GenKind,
    #[arg(long, value_delimiter = ',', default_values_t = [100, 100])]
    pub blocks: Vec<usize>,
    #[arg(long, default_value_t = 0.1)]
    pub intra_p: f64,
    #[arg(long, default_value_t = 0.005)]
    pub inter_p: f64,
    #[arg(long, default_value_t = 50)]
    pub vocab_per_class: usize,
    #[arg(long, default_value_t = 100)]
    pub doc_len: usize,
    #[arg(long, default_value_t = 0.3)]
    pub noise_frac: f64,
    #[arg(long, default_value_t = 20)]
    pub tokens_per_post: usize,
    /// Names per class for `--kind names`.
    #[arg(long, default_value_t = 10_000)]
    pub names: usize,
    #[arg(long, value_enum, default_value_t = InputFormat::Jsonl)]
    pub format: InputFormat,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Dataset directories to load.
    #[arg(long = "dataset")]
    pub datasets: Vec<PathBuf>,
    #[arg(long)]
    pub sessions: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    #[arg(long)]
    pub randstring_model: Option<PathBuf>,
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::InvalidArgument(_)
        | Error::UnknownSpace(_)
        | Error::UnknownAccount(_)
        | Error::Mode(_) => 1,
        Error::Spectral(_) | Error::Training(_) => 3,
        _ => 2,
    }
}

const SUBCOMMANDS: &[&str] = &["ingest", "embed", "query", "expand", "eval", "project", "randstring", "gen", "serve"];
const NESTED: &[&str] = &["train", "predict"];

fn toml_flags(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let table: toml::Table = text.parse().map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut flags = Vec::new();
    for (key, value) in table {
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            toml::Value::Boolean(true) => flags.push(flag),
            toml::Value::Boolean(false) => {}
            toml::Value::String(s) => flags.extend([flag, s]),
            toml::Value::Integer(i) => flags.extend([flag, i.to_string()]),
            toml::Value::Float(f) => flags.extend([flag, f.to_string()]),
            toml::Value::Array(items) => {
                let parts: Vec<String> = items
                    .into_iter()
                    .map(|v| match v {
                        toml::Value::String(s) => s,
                        other => other.to_string(),
                    })
                    .collect();
                flags.extend([flag, parts.join(",")]);
            }
            other => return Err(Error::Config(format!("unsupported value for '{key}': {other}"))),
        }
    }
    Ok(flags)
}

/// Splice flags from `--config` right after the subcommand so explicit
/// flags, which come later, override them.
pub fn expand_config(args: Vec<String>) -> Result<Vec<String>> {
    let mut config = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            config = Some(it.next().ok_or_else(|| Error::Config("--config needs a file".into()))?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            config = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(config) = config else { return Ok(rest) };
    let flags = toml_flags(Path::new(&config))?;
    let Some(mut at) = rest.iter().skip(1).position(|a| SUBCOMMANDS.contains(&a.as_str())).map(|i| i + 2) else {
        return Ok(rest);
    };
    if rest.get(at).is_some_and(|a| NESTED.contains(&a.as_str())) {
        at += 1;
    }
    rest.splice(at..at, flags);
    Ok(rest)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            Box::new(BufWriter::new(File::create(p)?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Dataset(format!("cannot open {}: {e}", path.display())))
}

fn infer_format(path: &Path, explicit: Option<InputFormat>) -> PostFormat {
    match explicit {
        Some(InputFormat::Csv) => PostFormat::Csv,
        Some(InputFormat::Jsonl) => PostFormat::Jsonl,
        None if path.extension().is_some_and(|e| e == "csv") => PostFormat::Csv,
        None => PostFormat::Jsonl,
    }
}

fn run_ingest(a: &IngestArgs) -> Result<()> {
    let (accounts, edges) = if let (Some(edges), Some(texts)) = (&a.edges, &a.texts) {
        let edges = read_edges_csv(open(edges)?)?;
        let texts = read_node_text_csv(open(texts)?)?;
        assemble_from_csv_corpus(&texts, &edges, a.strip_tags)?
    } else {
        let input = a.input.as_ref().ok_or_else(|| Error::InvalidArgument("--input is required".into()))?;
        let parsed = parse_posts(BufReader::new(open(input)?), infer_format(input, a.format))?;
        eprintln!("parsed {} posts, skipped {} malformed", parsed.posts.len(), parsed.skipped);
        let edges = build_edges(&parsed.posts);
        assemble_dataset(&parsed.posts, &edges, a.strip_tags)?
    };
    let labels = match &a.labels {
        Some(p) => {
            let ids: Vec<&str> = accounts.iter().map(|r| r.account_id.as_str()).collect();
            Some(LabelSet::read_csv(open(p)?)?.restrict(&ids))
        }
        None => None,
    };
    Dataset::write_files(&a.out, &accounts, &edges, labels.as_ref())?;
    eprintln!("dataset {}: {} accounts, {} edges", a.out.display(), accounts.len(), edges.len());
    Ok(())
}

fn model_params(a: &EmbedArgs) -> Result<ModelParams> {
    let lda_metric: Metric = a.lda_metric.parse()?;
    Ok(ModelParams {
        dim: a.dim,
        seed: a.seed,
        topics: a.topics,
        alpha: a.alpha,
        beta: a.beta,
        iters: a.iters,
        lda_metric,
        walks: WalkConfig {
            walks_per_node: a.walks_per_node,
            walk_length: a.walk_length,
            p: a.p,
            q: a.q,
            seed: a.seed,
            weighted: a.weighted,
        },
        window: a.window,
        negatives: a.negatives,
        epochs: a.epochs,
        lr: a.lr,
        lambda: a.lambda,
        katz_alpha: a.katz_alpha,
        wl_iters: a.wl_iters,
        mix: a.mix,
        content: a.content.clone(),
        network: a.network.clone(),
        seeds: a.seeds.clone(),
        vocab: VocabConfig { min_df: a.min_df, max_df_frac: a.max_df_frac, max_terms: a.max_terms },
    })
}

fn run_embed(a: &EmbedArgs) -> Result<()> {
    let model: Model = a.model.parse()?;
    let params = model_params(a)?;
    let mut ds = Dataset::load(&a.dataset)?;
    if matches!(model, Model::Jaccard | Model::Cosine) {
        let mode = if model == Model::Jaccard { TermWeighting::Binary } else { TermWeighting::TfIdf };
        let m = account_matrix(&ds.docs(), &params.vocab, mode)?;
        let path = a.out.clone().unwrap_or_else(|| ds.dir().join("spaces").join(format!("{}.tsv", a.model)));
        let mut out = output(Some(&path))?;
        m.write_tsv(&mut out, ds.graph().ids())?;
        out.flush()?;
        eprintln!("{} needs no training; wrote its document-term matrix to {}", a.model, path.display());
        return Ok(());
    }
    if model == Model::Sybilrank && params.seeds.is_empty() {
        return Err(Error::InvalidArgument(
            "sybilrank needs --seeds to store a ranking; seedless queries use the built-in space".into(),
        ));
    }
    let started = std::time::Instant::now();
    let SearchSpace::Vectors(space) = build_space(&ds, model, &params)? else {
        return Err(Error::InvalidArgument(format!("model '{}' produced no vectors", a.model)));
    };
    let space = match &a.name {
        Some(n) => space.with_name(n.clone()),
        None => space,
    };
    let path = match &a.out {
        Some(p) => {
            let mut out = output(Some(p))?;
            space.write(&mut out)?;
            out.flush()?;
            p.clone()
        }
        None => ds.save_space(space)?,
    };
    eprintln!("wrote {} in {:.1}s", path.display(), started.elapsed().as_secs_f64());
    Ok(())
}

fn write_json<T: serde::Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut out = output(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn run_query(a: &QueryArgs) -> Result<()> {
    let ds = Dataset::load(&a.dataset)?;
    let space = ds.space(&a.space)?;
    let agg: Aggregation = a.aggregation.parse()?;
    let result = query(space, &a.seeds, a.k, agg)?;
    write_json(a.out.as_deref(), &result)
}

fn run_expand(a: &ExpandArgs) -> Result<()> {
    let ds = Dataset::load(&a.dataset)?;
    let space = ds.space(&a.space)?;
    let agg: Aggregation = a.aggregation.parse()?;
    let labels = match a.accept {
        AcceptRule::All => None,
        AcceptRule::Labels => {
            Some(ds.labels().ok_or_else(|| Error::InvalidArgument("--accept labels needs dataset labels".into()))?)
        }
    };
    let accept = |h: &crate::knn::Hit| labels.is_none_or(|l| l.is_positive(&h.id));
    let expansion = recursive_expand(space, &a.seeds, a.k, a.hops, agg, &accept)?;
    write_json(a.out.as_deref(), &expansion)
}

fn run_eval(a: &EvalArgs) -> Result<()> {
    let ds = Dataset::load(&a.dataset)?;
    let labels = match &a.labels {
        Some(p) => LabelSet::read_csv(open(p)?)?,
        None => ds.labels().cloned().ok_or_else(|| Error::InvalidArgument("no --labels and the dataset has none".into()))?,
    };
    let mut reports = Vec::new();
    for name in &a.space {
        reports.push(evaluate(ds.space(name)?, &labels, &a.k)?);
    }
    if a.json {
        write_json(a.out.as_deref(), &reports)
    } else {
        let mut out = output(a.out.as_deref())?;
        out.write_all(render_table(&reports).as_bytes())?;
        out.flush()?;
        Ok(())
    }
}

fn run_project(a: &ProjectArgs) -> Result<()> {
    let ds = Dataset::load(&a.dataset)?;
    let method: ProjectionMethod = a.method.parse()?;
    let cfg = TsneConfig { perplexity: a.perplexity, iters: a.iters, seed: a.seed, ..Default::default() };
    let proj = project_2d(ds.vector_space(&a.space)?, method, &cfg)?;
    let mut out = output(a.out.as_deref())?;
    write_projection_csv(&mut out, &proj, ds.labels())?;
    out.flush()?;
    Ok(())
}

fn read_names(path: &Path) -> Result<Vec<String>> {
    Ok(BufReader::new(open(path)?)
        .lines()
        .collect::<io::Result<Vec<_>>>()?
        .into_iter()
        .map(|l| l.trim().to_string())
        .filter(|l| !l.is_empty())
        .collect())
}

fn run_randstring(cmd: &RandstringCommand) -> Result<()> {
    match cmd {
        RandstringCommand::Train(a) => {
            let (pos, neg) = match (&a.positives, &a.negatives) {
                (Some(p), Some(n)) => (read_names(p)?, read_names(n)?),
                _ => gen_benchmark(a.benchmark, a.seed),
            };
            let cfg = TrainConfig { lr: a.lr, epochs: a.epochs, l2: a.l2, seed: a.seed };
            let model = train(&pos, &neg, &cfg)?;
            let mut out = output(Some(&a.out))?;
            out.write_all(model.to_json()?.as_bytes())?;
            out.write_all(b"\n")?;
            out.flush()?;
            eprintln!("trained on {} + {} names, final loss {:.4}", pos.len(), neg.len(), model.losses.last().unwrap_or(&f64::NAN));
            Ok(())
        }
        RandstringCommand::Predict(a) => {
            let model = LogisticModel::from_json(&fs::read_to_string(&a.model)?)?;
            let input: Box<dyn BufRead> = match &a.input {
                Some(p) => Box::new(BufReader::new(open(p)?)),
                None => Box::new(BufReader::new(io::stdin().lock())),
            };
            let mut out = output(a.out.as_deref())?;
            predict_batch(&model, input, &mut out)?;
            out.flush()?;
            Ok(())
        }
    }
}

fn run_gen(a: &GenArgs) -> Result<()> {
    fs::create_dir_all(&a.out)?;
    match a.kind {
        GenKind::Names => {
            let (pos, neg) = gen_benchmark(a.names, a.seed);
            let mut w = csv::Writer::from_writer(BufWriter::new(File::create(a.out.join("names.csv"))?));
            w.write_record(["name", "label"])?;
            for n in &pos {
                w.write_record([n.as_str(), "1"])?;
            }
            for n in &neg {
                w.write_record([n.as_str(), "0"])?;
            }
            w.flush()?;
        }
        GenKind::Planted => {
            let planted = gen_planted_graph(&a.blocks, a.intra_p, a.inter_p, a.seed)?;
            let docs = gen_topic_corpus(&planted.blocks, a.vocab_per_class, a.doc_len, a.noise_frac, a.seed)?;
            let posts = gen_posts(&planted, &docs, a.tokens_per_post, a.seed)?;
            match a.format {
                InputFormat::Csv => write_posts_csv(BufWriter::new(File::create(a.out.join("posts.csv"))?), &posts)?,
                InputFormat::Jsonl => {
                    let mut w = BufWriter::new(File::create(a.out.join("posts.jsonl"))?);
                    for p in &posts {
                        serde_json::to_writer(&mut w, &post_to_json(p))?;
                        w.write_all(b"\n")?;
                    }
                    w.flush()?;
                }
            }
            planted.labels.write_csv(BufWriter::new(File::create(a.out.join("labels.csv"))?))?;
            eprintln!(
                "generated {} posts for {} accounts ({} edges)",
                posts.len(),
                planted.graph.node_count(),
                planted.graph.edge_count()
            );
        }
    }
    Ok(())
}

fn run_serve(a: &ServeArgs, threads: usize) -> Result<()> {
    let config = ServiceConfig {
        bind: a.bind,
        datasets: a.datasets.clone(),
        sessions: a.sessions.clone(),
        randstring_model: a.randstring_model.clone(),
    };
    let runtime = tokio::runtime::Builder::new_multi_thread().worker_threads(threads.max(1)).enable_all().build()?;
    runtime.block_on(serve(config))
}

/// Execute a parsed command line.
pub fn execute(cli: &Cli) -> Result<()> {
    if cli.threads == 0 {
        return Err(Error::InvalidArgument("--threads must be at least 1".into()));
    }
    // Fails only when a pool already exists, e.g. in tests.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    match &cli.command {
        Command::Ingest(a) => run_ingest(a),
        Command::Embed(a) => run_embed(a),
        Command::Query(a) => run_query(a),
        Command::Expand(a) => run_expand(a),
        Command::Eval(a) => run_eval(a),
        Command::Project(a) => run_project(a),
        Command::Randstring(c) => run_randstring(c),
        Command::Gen(a) => run_gen(a),
        Command::Serve(a) => run_serve(a, cli.threads),
    }
}

/// Parse `args` (including the program name), run, and return the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<String> = args.into_iter().map(|a| a.into().to_string_lossy().into_owned()).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
