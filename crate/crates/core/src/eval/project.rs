//! Two-dimensional projections for visual inspection: PCA and exact t-SNE.

use std::io::Write;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::embedding::{EmbeddingSpace, Metric};
use crate::error::{Error, Result};
use crate::eval::LabelSet;
use crate::linalg::pca_scores;

/// Largest input accepted by the exact O(N²) t-SNE.
pub const TSNE_MAX_POINTS: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionMethod {
    Pca,
    Tsne,
}

impl FromStr for ProjectionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pca" => Ok(ProjectionMethod::Pca),
            "tsne" => Ok(ProjectionMethod::Tsne),
            other => Err(Error::InvalidArgument(format!("unknown projection method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iters: usize,
    pub learning_rate: f64,
    pub exaggeration: f64,
    pub exaggeration_iters: usize,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig { perplexity: 30.0, iters: 1000, learning_rate: 200.0, exaggeration: 12.0, exaggeration_iters: 250, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub ids: Vec<String>,
    /// N x 2.
    pub coords: DMatrix<f64>,
}

fn squared_distances(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (x.row(i) - x.row(j)).norm_squared();
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

/// Row-conditional affinities `p(j|i)` with a per-point Gaussian bandwidth
/// found by bisection so that each row's entropy (in nats) is within
/// `1e-5` of `ln(perplexity)`. Returns the matrix and the row entropies.
pub fn conditional_probabilities(dist2: &DMatrix<f64>, perplexity: f64) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let n = dist2.nrows();
    let target = perplexity.ln();
    let mut p = DMatrix::zeros(n, n);
    let mut entropies = vec![0.0; n];
    let mut row = vec![0.0; n];
    for i in 0..n {
        let dmin = (0..n).filter(|&j| j != i).map(|j| dist2[(i, j)]).fold(f64::INFINITY, f64::min);
        let (mut beta, mut lo, mut hi) = (1.0, 0.0, f64::INFINITY);
        let mut h = 0.0;
        for _ in 0..200 {
            let mut sum = 0.0;
            let mut weighted = 0.0;
            for j in 0..n {
                if j == i {
                    row[j] = 0.0;
                    continue;
                }
                let shifted = dist2[(i, j)] - dmin;
                let w = (-beta * shifted).exp();
                row[j] = w;
                sum += w;
                weighted += shifted * w;
            }
            h = sum.ln() + beta * weighted / sum;
            if (h - target).abs() < 1e-5 {
                break;
            }
            if h > target {
                lo = beta;
                beta = if hi.is_finite() { (beta + hi) / 2.0 } else { beta * 2.0 };
            } else {
                hi = beta;
                beta = (beta + lo) / 2.0;
            }
        }
        let sum: f64 = row.iter().sum();
        for j in 0..n {
            p[(i, j)] = row[j] / sum;
        }
        entropies[i] = h;
    }
    Ok((p, entropies))
}

/// Symmetrized joint affinities `(p(j|i) + p(i|j)) / 2N`.
pub fn joint_probabilities(x: &DMatrix<f64>, perplexity: f64) -> Result<DMatrix<f64>> {
    let (cond, _) = conditional_probabilities(&squared_distances(x), perplexity)?;
    let n = x.nrows() as f64;
    Ok((&cond + cond.transpose()) / (2.0 * n))
}

fn check_tsne_input(n: usize, perplexity: f64) -> Result<()> {
    if n > TSNE_MAX_POINTS {
        return Err(Error::Config(format!("exact t-SNE handles at most {TSNE_MAX_POINTS} points, got {n}")));
    }
    if !(perplexity >= 1.0 && perplexity < n as f64 / 3.0) {
        return Err(Error::Config(format!("perplexity {perplexity} infeasible for {n} points (needs 1 <= perplexity < N/3)")));
    }
    Ok(())
}

/// Exact t-SNE with early exaggeration, momentum and per-parameter gains.
/// Initialized from the top two principal components scaled to a standard
/// deviation of 1e-4, plus a small seeded jitter.
pub fn tsne(x: &DMatrix<f64>, config: &TsneConfig) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    check_tsne_input(n, config.perplexity)?;
    let p = joint_probabilities(x, config.perplexity)?;

    let mut y = pca_scores(x, 2)?;
    let sd = (y.column(0).norm_squared() / n as f64).sqrt();
    if sd > 0.0 {
        y *= 1e-4 / sd;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for v in y.iter_mut() {
        let z: f64 = StandardNormal.sample(&mut rng);
        *v += 1e-6 * z;
    }

    let mut update = DMatrix::<f64>::zeros(n, 2);
    let mut gains = DMatrix::<f64>::from_element(n, 2, 1.0);
    let mut num = DMatrix::<f64>::zeros(n, n);
    let mut grad = DMatrix::<f64>::zeros(n, 2);
    for iter in 0..config.iters {
        let early = iter < config.exaggeration_iters;
        let exaggeration = if early { config.exaggeration } else { 1.0 };
        let momentum = if early { 0.5 } else { 0.8 };
        let mut z = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let dx = y[(i, 0)] - y[(j, 0)];
                let dy = y[(i, 1)] - y[(j, 1)];
                let q = 1.0 / (1.0 + dx * dx + dy * dy);
                num[(i, j)] = q;
                num[(j, i)] = q;
                z += 2.0 * q;
            }
        }
        grad.fill(0.0);
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let m = 4.0 * (exaggeration * p[(i, j)] - num[(i, j)] / z) * num[(i, j)];
                grad[(i, 0)] += m * (y[(i, 0)] - y[(j, 0)]);
                grad[(i, 1)] += m * (y[(i, 1)] - y[(j, 1)]);
            }
        }
        for idx in 0..2 * n {
            let same_sign = (grad[idx] > 0.0) == (update[idx] > 0.0);
            gains[idx] = if same_sign { (gains[idx] * 0.8).max(0.01) } else { gains[idx] + 0.2 };
            update[idx] = momentum * update[idx] - config.learning_rate * gains[idx] * grad[idx];
            y[idx] += update[idx];
        }
        for c in 0..2 {
            let mean = y.column(c).mean();
            y.column_mut(c).add_scalar_mut(-mean);
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Training(format!("t-SNE diverged at iteration {iter}")));
        }
    }
    Ok(y)
}

fn space_matrix(space: &EmbeddingSpace) -> DMatrix<f64> {
    let mut x = space.to_matrix();
    if space.metric() == Metric::Cosine {
        for mut row in x.row_iter_mut() {
            let norm = row.norm();
            if norm > 0.0 {
                row /= norm;
            }
        }
    }
    x
}

/// Project an embedding space to two dimensions. Cosine spaces are
/// unit-normalized first so Euclidean geometry matches their metric.
pub fn project_2d(space: &EmbeddingSpace, method: ProjectionMethod, config: &TsneConfig) -> Result<Projection> {
    let x = space_matrix(space);
    let coords = match method {
        ProjectionMethod::Pca => pca_scores(&x, 2)?,
        ProjectionMethod::Tsne => tsne(&x, config)?,
    };
    Ok(Projection { ids: space.ids().to_vec(), coords })
}

/// CSV `account_id,x,y,label`; the label column is `1`, `0` or empty.
pub fn write_projection_csv<W: Write>(out: W, projection: &Projection, labels: Option<&LabelSet>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["account_id", "x", "y", "label"])?;
    for (i, id) in projection.ids.iter().enumerate() {
        let label = match labels.and_then(|l| l.get(id)) {
            Some(true) => "1",
            Some(false) => "0",
            None => "",
        };
        let x = format!("{:.9}", projection.coords[(i, 0)]);
        let y = format!("{:.9}", projection.coords[(i, 1)]);
        w.write_record([id.as_str(), &x, &y, label])?;
    }
    w.flush()?;
    Ok(())
}
