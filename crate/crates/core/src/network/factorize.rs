//! Graph factorization by SGD over observed edges.
//!
//! Minimizes `Σ_{(i,j)∈E} (A_ij − ⟨Y_i, Y_j⟩)² + (λ/2) Σ_i ‖Y_i‖²`. Each
//! epoch visits the edges in a seeded random order and updates both
//! endpoints from the squared-error term, then applies one regularizer step
//! `Y ← (1 − lr·λ) Y` to every node.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::embedding::{EmbeddingSpace, Metric, SpaceKind};
use crate::error::{Error, Result};
use crate::graph::CommGraph;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorizeConfig {
    pub dim: usize,
    pub lambda: f64,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for FactorizeConfig {
    fn default() -> Self {
        FactorizeConfig { dim: 32, lambda: 0.01, lr: 0.01, epochs: 100, seed: 0 }
    }
}

/// One observed entry of the adjacency matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservedEdge {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
}

pub fn observed_edges(graph: &CommGraph) -> Vec<ObservedEdge> {
    let mut out = Vec::new();
    for s in 0..graph.node_count() {
        for &(t, w) in graph.neighbors(s) {
            out.push(ObservedEdge { source: s, target: t, weight: w as f64 });
        }
    }
    out
}

fn dot(y: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    y.row(i).dot(&y.row(j))
}

/// Full objective for `Y` (N x D).
pub fn objective(y: &DMatrix<f64>, edges: &[ObservedEdge], lambda: f64) -> f64 {
    let fit: f64 = edges
        .iter()
        .map(|e| {
            let r = e.weight - dot(y, e.source, e.target);
            r * r
        })
        .sum();
    fit + 0.5 * lambda * y.norm_squared()
}

/// Analytic gradient of [`objective`].
pub fn gradient(y: &DMatrix<f64>, edges: &[ObservedEdge], lambda: f64) -> DMatrix<f64> {
    let mut g = y * lambda;
    for e in edges {
        let r = e.weight - dot(y, e.source, e.target);
        let (ys, yt) = (y.row(e.source).clone_owned(), y.row(e.target).clone_owned());
        let mut row = g.row_mut(e.source);
        row -= yt * (2.0 * r);
        let mut row = g.row_mut(e.target);
        row -= ys * (2.0 * r);
    }
    g
}

/// Random initialization used for cold starts: `N(0, 0.1²)` entries.
pub fn random_init(n: usize, dim: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let normal = Normal::new(0.0, 0.1).unwrap();
    DMatrix::from_fn(n, dim, |_, _| normal.sample(&mut rng))
}

#[derive(Debug, Clone)]
pub struct FactorizeOutcome {
    pub vectors: DMatrix<f64>,
    /// Objective after each epoch.
    pub losses: Vec<f64>,
}

/// Run SGD from `init` (N x D). Zero epochs return `init` unchanged.
pub fn factorize_from(edges: &[ObservedEdge], init: DMatrix<f64>, config: &FactorizeConfig) -> Result<FactorizeOutcome> {
    let mut y = init;
    let mut order: Vec<usize> = (0..edges.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut losses = Vec::with_capacity(config.epochs);
    let d = y.ncols();
    let mut ys = vec![0.0; d];
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for &k in &order {
            let e = edges[k];
            let r = e.weight - dot(&y, e.source, e.target);
            let step = 2.0 * config.lr * r;
            for c in 0..d {
                ys[c] = y[(e.source, c)];
            }
            for c in 0..d {
                let yt = y[(e.target, c)];
                y[(e.source, c)] += step * yt;
                y[(e.target, c)] += step * ys[c];
            }
        }
        if config.lambda != 0.0 {
            y *= 1.0 - config.lr * config.lambda;
        }
        let loss = objective(&y, edges, config.lambda);
        if !loss.is_finite() {
            return Err(Error::Training(format!(
                "graph factorization diverged at epoch {epoch}; try a learning rate below {}",
                config.lr
            )));
        }
        losses.push(loss);
    }
    Ok(FactorizeOutcome { vectors: y, losses })
}

/// Cold-start graph factorization over the directed graph.
pub fn graph_factorize(graph: &CommGraph, config: &FactorizeConfig) -> Result<(EmbeddingSpace, Vec<f64>)> {
    if config.dim == 0 || config.dim > graph.node_count() {
        return Err(Error::Config(format!(
            "factorization dimension {} must lie in 1..={}",
            config.dim,
            graph.node_count()
        )));
    }
    let init = random_init(graph.node_count(), config.dim, config.seed);
    let out = factorize_from(&observed_edges(graph), init, config)?;
    let space = EmbeddingSpace::from_matrix("gf", graph.ids().to_vec(), &out.vectors, Metric::Cosine, SpaceKind::Network, config.seed)?;
    Ok((space, out.losses))
}
