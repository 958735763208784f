//! Exact nearest-neighbor retrieval.
//!
//! Three kinds of searchable space exist: vector spaces (including stored
//! ranked lists), direct similarity over document-term rows (Jaccard or
//! cosine, no embedding), and trust propagation that is recomputed for every
//! seed set. All searches are brute force; ties resolve by ascending
//! account id so results are reproducible.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::content::{cosine_similarity, jaccard_similarity};
use crate::embedding::{EmbeddingSpace, Metric, SpaceKind};
use crate::error::{Error, Result};
use crate::graph::CommGraph;
use crate::network::sybilrank::{scores, sybil_rank};
use crate::text::{DocTermMatrix, TermWeighting};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Rank by distance to the centroid of the seed vectors.
    #[default]
    Mean,
    /// Rank by distance to the closest seed.
    MinDist,
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Aggregation::Mean),
            "min_dist" | "min-dist" => Ok(Aggregation::MinDist),
            other => Err(Error::InvalidArgument(format!("unknown aggregation '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    Distance,
    Similarity,
    Trust,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub id: String,
    pub score: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub seeds: Vec<String>,
    pub space: String,
    pub k: usize,
    pub hits: Vec<Hit>,
    pub score_kind: ScoreKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectMeasure {
    Jaccard,
    Cosine,
}

/// Pairwise similarity over document-term rows.
#[derive(Debug, Clone)]
pub struct DirectSpace {
    name: String,
    ids: Vec<String>,
    index: HashMap<String, usize>,
    rows: DocTermMatrix,
    measure: DirectMeasure,
}

impl DirectSpace {
    /// Jaccard needs a binary matrix, cosine any weighting (TF-IDF usual).
    pub fn new(name: impl Into<String>, ids: Vec<String>, rows: DocTermMatrix, measure: DirectMeasure) -> Result<Self> {
        if ids.len() != rows.n_rows() {
            return Err(Error::Alignment(format!("{} ids for {} rows", ids.len(), rows.n_rows())));
        }
        if measure == DirectMeasure::Jaccard && rows.mode() != TermWeighting::Binary {
            return Err(Error::Mode("Jaccard similarity needs a binary matrix".into()));
        }
        let index = ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        Ok(DirectSpace { name: name.into(), ids, index, rows, measure })
    }

    pub fn similarity(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.rows.row(i), self.rows.row(j));
        match self.measure {
            DirectMeasure::Jaccard => jaccard_similarity(a.indices, b.indices),
            DirectMeasure::Cosine => cosine_similarity(&a, &b),
        }
    }

    pub fn measure(&self) -> DirectMeasure {
        self.measure
    }
}

/// Trust propagation from the query seeds over a fixed graph.
#[derive(Debug, Clone)]
pub struct PropagationSpace {
    name: String,
    graph: CommGraph,
    iterations: Option<usize>,
}

impl PropagationSpace {
    pub fn new(name: impl Into<String>, graph: &CommGraph, iterations: Option<usize>) -> Self {
        PropagationSpace { name: name.into(), graph: graph.symmetrize(), iterations }
    }

    pub fn graph(&self) -> &CommGraph {
        &self.graph
    }
}

#[derive(Debug, Clone)]
pub enum SearchSpace {
    Vectors(EmbeddingSpace),
    Direct(DirectSpace),
    Propagation(PropagationSpace),
}

impl From<EmbeddingSpace> for SearchSpace {
    fn from(s: EmbeddingSpace) -> Self {
        SearchSpace::Vectors(s)
    }
}

impl SearchSpace {
    pub fn name(&self) -> &str {
        match self {
            SearchSpace::Vectors(s) => s.name(),
            SearchSpace::Direct(s) => &s.name,
            SearchSpace::Propagation(s) => &s.name,
        }
    }

    pub fn ids(&self) -> &[String] {
        match self {
            SearchSpace::Vectors(s) => s.ids(),
            SearchSpace::Direct(s) => &s.ids,
            SearchSpace::Propagation(s) => s.graph.ids(),
        }
    }

    pub fn len(&self) -> usize {
        self.ids().len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids().is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        match self {
            SearchSpace::Vectors(s) => s.index_of(id),
            SearchSpace::Direct(s) => s.index.get(id).copied(),
            SearchSpace::Propagation(s) => s.graph.index_of(id),
        }
    }

    /// Short description: `content`, `network`, `fused`, `ranked`, `direct`
    /// or `propagation`.
    pub fn kind_label(&self) -> &'static str {
        match self {
            SearchSpace::Vectors(s) => s.kind().as_str(),
            SearchSpace::Direct(_) => "direct",
            SearchSpace::Propagation(_) => "propagation",
        }
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            SearchSpace::Vectors(s) => Some(s.dim()),
            _ => None,
        }
    }

    pub fn metric_label(&self) -> &'static str {
        match self {
            SearchSpace::Vectors(s) if s.kind() == SpaceKind::Ranked => "ranked",
            SearchSpace::Vectors(s) => s.metric().as_str(),
            SearchSpace::Direct(d) => match d.measure {
                DirectMeasure::Jaccard => "jaccard",
                DirectMeasure::Cosine => "cosine",
            },
            SearchSpace::Propagation(_) => "trust",
        }
    }

    pub fn score_kind(&self) -> ScoreKind {
        match self {
            SearchSpace::Vectors(s) if s.kind() == SpaceKind::Ranked => ScoreKind::Trust,
            SearchSpace::Vectors(_) => ScoreKind::Distance,
            SearchSpace::Direct(_) => ScoreKind::Similarity,
            SearchSpace::Propagation(_) => ScoreKind::Trust,
        }
    }

    fn resolve<S: AsRef<str>>(&self, seeds: &[S]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(seeds.len());
        for s in seeds {
            let id = s.as_ref();
            out.push(self.index_of(id).ok_or_else(|| Error::UnknownAccount(id.to_string()))?);
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// Score every node for the given seed indices (sorted, distinct).
    fn score_all(&self, seeds: &[usize], aggregation: Aggregation) -> Result<Vec<f64>> {
        Ok(match self {
            SearchSpace::Vectors(s) if s.kind() == SpaceKind::Ranked => s.data().to_vec(),
            SearchSpace::Vectors(s) => vector_scores(s, seeds, aggregation),
            SearchSpace::Direct(d) => (0..d.ids.len())
                .map(|v| seeds.iter().map(|&q| d.similarity(q, v)).fold(f64::NEG_INFINITY, f64::max))
                .collect(),
            SearchSpace::Propagation(p) => {
                let tv = sybil_rank(&p.graph, seeds, p.iterations)?;
                scores(&p.graph, &tv)
            }
        })
    }
}

fn vector_scores(space: &EmbeddingSpace, seeds: &[usize], aggregation: Aggregation) -> Vec<f64> {
    let metric: Metric = space.metric();
    match aggregation {
        Aggregation::Mean => {
            let mut centroid = vec![0.0; space.dim()];
            for &q in seeds {
                for (c, x) in centroid.iter_mut().zip(space.row(q)) {
                    *c += x;
                }
            }
            let inv = 1.0 / seeds.len() as f64;
            centroid.iter_mut().for_each(|c| *c *= inv);
            (0..space.len()).map(|v| metric.distance(&centroid, space.row(v))).collect()
        }
        Aggregation::MinDist => (0..space.len())
            .map(|v| {
                seeds
                    .iter()
                    .map(|&q| metric.distance(space.row(q), space.row(v)))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect(),
    }
}

/// Top-`k` accounts for a seed set, seeds excluded.
pub fn query<S: AsRef<str>>(space: &SearchSpace, seeds: &[S], k: usize, aggregation: Aggregation) -> Result<QueryResult> {
    query_excluding(space, seeds, k, aggregation, &HashSet::new())
}

/// Like [`query`], also skipping the node indices in `exclude`.
pub fn query_excluding<S: AsRef<str>>(
    space: &SearchSpace,
    seeds: &[S],
    k: usize,
    aggregation: Aggregation,
    exclude: &HashSet<usize>,
) -> Result<QueryResult> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("a query needs at least one seed".into()));
    }
    let seed_idx = space.resolve(seeds)?;
    let scores = space.score_all(&seed_idx, aggregation)?;
    let ascending = space.score_kind() == ScoreKind::Distance;
    let ids = space.ids();
    let mut candidates: Vec<usize> = (0..space.len())
        .filter(|v| seed_idx.binary_search(v).is_err() && !exclude.contains(v))
        .collect();
    let order = |a: &usize, b: &usize| -> Ordering {
        let by_score = if ascending {
            scores[*a].total_cmp(&scores[*b])
        } else {
            scores[*b].total_cmp(&scores[*a])
        };
        by_score.then_with(|| ids[*a].cmp(&ids[*b]))
    };
    if candidates.len() > k {
        candidates.select_nth_unstable_by(k - 1, order);
        candidates.truncate(k);
    }
    candidates.sort_by(order);
    let hits = candidates
        .into_iter()
        .enumerate()
        .map(|(r, v)| Hit { id: ids[v].clone(), score: scores[v], rank: r + 1 })
        .collect();
    Ok(QueryResult {
        seeds: seed_idx.iter().map(|&i| ids[i].clone()).collect(),
        space: space.name().to_string(),
        k,
        hits,
        score_kind: space.score_kind(),
    })
}

/// An account found during recursive expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discovery {
    pub id: String,
    pub hop: usize,
    /// Seeds of the query that returned this account.
    pub parents: Vec<String>,
    pub score: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expansion {
    pub seeds: Vec<String>,
    pub space: String,
    pub k: usize,
    pub hops: usize,
    pub found: Vec<Discovery>,
}

/// Breadth-first recursive search.
///
/// Hop 1 is a single query from the initial seeds. At every later hop each
/// accepted account from the previous hop is queried on its own, skipping
/// the initial seeds and everything already found, so every query surfaces
/// new accounts. Stops early once a hop accepts nothing.
pub fn recursive_expand<S: AsRef<str>>(
    space: &SearchSpace,
    seeds: &[S],
    k: usize,
    hops: usize,
    aggregation: Aggregation,
    accept: &dyn Fn(&Hit) -> bool,
) -> Result<Expansion> {
    if hops == 0 {
        return Err(Error::InvalidArgument("hops must be at least 1".into()));
    }
    let first = query(space, seeds, k, aggregation)?;
    let mut seen: HashSet<usize> = first.seeds.iter().filter_map(|id| space.index_of(id)).collect();
    let mut found = Vec::new();
    let mut frontier = Vec::new();
    for hit in &first.hits {
        seen.insert(space.index_of(&hit.id).expect("hit ids come from the space"));
        let accepted = accept(hit);
        if accepted {
            frontier.push(hit.id.clone());
        }
        found.push(Discovery { id: hit.id.clone(), hop: 1, parents: first.seeds.clone(), score: hit.score, accepted });
    }
    for hop in 2..=hops {
        if frontier.is_empty() {
            break;
        }
        let mut next = Vec::new();
        for parent in &frontier {
            let result = query_excluding(space, &[parent.as_str()], k, aggregation, &seen)?;
            for hit in result.hits {
                seen.insert(space.index_of(&hit.id).expect("hit ids come from the space"));
                let accepted = accept(&hit);
                if accepted {
                    next.push(hit.id.clone());
                }
                found.push(Discovery { id: hit.id, hop, parents: vec![parent.clone()], score: hit.score, accepted });
            }
        }
        frontier = next;
    }
    Ok(Expansion { seeds: first.seeds, space: first.space, k, hops, found })
}
