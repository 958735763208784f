//! Content + network spaces without deep models.

use nalgebra::DMatrix;

use crate::embedding::{EmbeddingSpace, Metric, SpaceKind};
use crate::error::{Error, Result};
use crate::graph::CommGraph;
use crate::linalg::pca_scores;
use crate::network::factorize::{factorize_from, observed_edges, FactorizeConfig};

/// Bring content vectors to `dim` columns in graph node order: unchanged
/// when the width already matches, PCA scores otherwise.
pub fn project_content(graph: &CommGraph, content: &EmbeddingSpace, dim: usize) -> Result<DMatrix<f64>> {
    let n = graph.node_count();
    let mut rows = DMatrix::zeros(n, content.dim());
    for (i, id) in graph.ids().iter().enumerate() {
        let v = content
            .vector(id)
            .ok_or_else(|| Error::Alignment(format!("content space '{}' has no vector for '{id}'", content.name())))?;
        rows.row_mut(i).copy_from_slice(v);
    }
    if content.dim() == dim {
        Ok(rows)
    } else {
        pca_scores(&rows, dim)
    }
}

/// Graph factorization initialized from a content embedding.
pub fn warm_start_factorize(
    graph: &CommGraph,
    content: &EmbeddingSpace,
    config: &FactorizeConfig,
) -> Result<(EmbeddingSpace, Vec<f64>)> {
    if config.dim == 0 {
        return Err(Error::Config("fused dimension must be at least 1".into()));
    }
    let init = project_content(graph, content, config.dim)?;
    let out = factorize_from(&observed_edges(graph), init, config)?;
    let space = EmbeddingSpace::from_matrix(
        "warmstart",
        graph.ids().to_vec(),
        &out.vectors,
        Metric::Cosine,
        SpaceKind::Fused,
        config.seed,
    )?;
    Ok((space, out.losses))
}

fn unit(row: &[f64]) -> impl Iterator<Item = f64> + '_ {
    let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
    let inv = if norm > 0.0 { 1.0 / norm } else { 0.0 };
    row.iter().map(move |x| x * inv)
}

/// Rows `[mix·â | (1−mix)·b̂]` over unit-normalized rows of `a` and `b`,
/// in the node order of `a`.
pub fn concat_spaces(a: &EmbeddingSpace, b: &EmbeddingSpace, mix: f64) -> Result<EmbeddingSpace> {
    if !(0.0..=1.0).contains(&mix) {
        return Err(Error::InvalidArgument(format!("mix weight {mix} outside [0, 1]")));
    }
    if a.len() != b.len() {
        return Err(Error::Alignment(format!("spaces cover {} and {} accounts", a.len(), b.len())));
    }
    let dim = a.dim() + b.dim();
    let mut data = Vec::with_capacity(a.len() * dim);
    for (i, id) in a.ids().iter().enumerate() {
        let other = b
            .vector(id)
            .ok_or_else(|| Error::Alignment(format!("space '{}' has no vector for '{id}'", b.name())))?;
        data.extend(unit(a.row(i)).map(|x| mix * x));
        data.extend(unit(other).map(|x| (1.0 - mix) * x));
    }
    EmbeddingSpace::new("concat", a.ids().to_vec(), dim, data, Metric::Cosine, SpaceKind::Fused, a.seed())
}
