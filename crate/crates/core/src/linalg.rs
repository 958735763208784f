//! Dense linear algebra helpers: truncated SVD and PCA.
//!
//! Small problems go through an exact dense SVD; larger ones use randomized
//! subspace iteration against a [`LinearOperator`] so sparse matrices never
//! have to be densified.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// A matrix that can multiply dense blocks from either side.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `A * x`
    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64>;
    /// `A^T * x`
    fn apply_transpose(&self, x: &DMatrix<f64>) -> DMatrix<f64>;
    fn to_dense(&self) -> DMatrix<f64>;
}

impl LinearOperator for DMatrix<f64> {
    fn nrows(&self) -> usize {
        self.nrows()
    }

    fn ncols(&self) -> usize {
        self.ncols()
    }

    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self * x
    }

    fn apply_transpose(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.tr_mul(x)
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvdOptions {
    pub oversample: usize,
    pub power_iters: usize,
    /// Use the exact dense path when `min(m, n)` is at most this.
    pub exact_threshold: usize,
    pub seed: u64,
}

impl Default for SvdOptions {
    fn default() -> Self {
        SvdOptions { oversample: 10, power_iters: 4, exact_threshold: 500, seed: 0 }
    }
}

/// Rank-k factors `A ~ U diag(s) V^T`, singular values descending.
#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    pub u: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub v: DMatrix<f64>,
}

impl TruncatedSvd {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for (j, s) in self.singular_values.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * self.v.transpose()
    }
}

pub fn truncated_svd(op: &dyn LinearOperator, rank: usize, opts: &SvdOptions) -> Result<TruncatedSvd> {
    let (m, n) = (op.nrows(), op.ncols());
    let full = m.min(n);
    if rank == 0 || rank > full {
        return Err(Error::Config(format!("SVD rank {rank} must lie in 1..={full} for a {m}x{n} matrix")));
    }
    let mut svd = if full <= opts.exact_threshold || rank + opts.oversample >= full {
        exact_svd(&op.to_dense(), rank)?
    } else {
        randomized_svd(op, rank, opts)?
    };
    fix_signs(&mut svd);
    Ok(svd)
}

fn exact_svd(a: &DMatrix<f64>, rank: usize) -> Result<TruncatedSvd> {
    let svd = a.clone().svd(true, true);
    let (u, vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(Error::Spectral("SVD did not converge".into())),
    };
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]).then(i.cmp(&j)));
    order.truncate(rank);
    let u = DMatrix::from_fn(a.nrows(), rank, |r, c| u[(r, order[c])]);
    let v = DMatrix::from_fn(a.ncols(), rank, |r, c| vt[(order[c], r)]);
    let singular_values = order.iter().map(|&i| svd.singular_values[i]).collect();
    Ok(TruncatedSvd { u, singular_values, v })
}

fn orthonormalize(y: DMatrix<f64>) -> DMatrix<f64> {
    y.qr().q()
}

fn randomized_svd(op: &dyn LinearOperator, rank: usize, opts: &SvdOptions) -> Result<TruncatedSvd> {
    let n = op.ncols();
    let width = (rank + opts.oversample).min(op.nrows().min(n));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let omega = DMatrix::from_fn(n, width, |_, _| StandardNormal.sample(&mut rng));
    let mut q = orthonormalize(op.apply(&omega));
    for _ in 0..opts.power_iters {
        let z = orthonormalize(op.apply_transpose(&q));
        q = orthonormalize(op.apply(&z));
    }
    // B = Q^T A, computed as (A^T Q)^T
    let b = op.apply_transpose(&q).transpose();
    let small = exact_svd(&b, rank)?;
    Ok(TruncatedSvd { u: q * small.u, singular_values: small.singular_values, v: small.v })
}

/// Make the largest-magnitude entry of every left singular vector positive.
fn fix_signs(svd: &mut TruncatedSvd) {
    for j in 0..svd.rank() {
        let col = svd.u.column(j);
        let mut best = 0.0f64;
        for &x in col.iter() {
            if x.abs() > best.abs() + 1e-12 {
                best = x;
            }
        }
        if best < 0.0 {
            svd.u.column_mut(j).neg_mut();
            svd.v.column_mut(j).neg_mut();
        }
    }
}

/// Principal-component scores of the rows of `x` (N x D) onto the top
/// `components` directions. Columns beyond the data rank are zero.
pub fn pca_scores(x: &DMatrix<f64>, components: usize) -> Result<DMatrix<f64>> {
    Ok(pca(x, components)?.0)
}

/// Scores (N x c) and principal directions (D x c, orthonormal columns up
/// to the data rank, zero beyond it).
pub fn pca(x: &DMatrix<f64>, components: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (n, d) = x.shape();
    if components == 0 {
        return Err(Error::Config("PCA needs at least one component".into()));
    }
    let mut centered = x.clone();
    for j in 0..d {
        let mean = x.column(j).mean();
        centered.column_mut(j).add_scalar_mut(-mean);
    }
    let mut scores = DMatrix::zeros(n, components);
    let mut directions = DMatrix::zeros(d, components);
    let rank = components.min(n.min(d));
    if rank == 0 {
        return Ok((scores, directions));
    }
    let svd = truncated_svd(&centered, rank, &SvdOptions { exact_threshold: usize::MAX, ..Default::default() })?;
    let projected = &centered * &svd.v;
    scores.columns_mut(0, rank).copy_from(&projected);
    directions.columns_mut(0, rank).copy_from(&svd.v);
    Ok((scores, directions))
}
