//! Katz proximity and the HOPE asymmetric embedding built on it.

use nalgebra::DMatrix;

use crate::embedding::{EmbeddingSpace, Metric, SpaceKind};
use crate::error::{Error, Result};
use crate::graph::{CommGraph, DEFAULT_DENSE_CAP};
use crate::linalg::{truncated_svd, SvdOptions};

const POWER_STEPS: usize = 100;
const RESIDUAL_LIMIT: f64 = 1e-6;

/// `S = Σ_{k≥1} α^k A^k` for a non-negative adjacency matrix.
#[derive(Debug, Clone)]
pub struct KatzMatrix {
    pub s: DMatrix<f64>,
    pub alpha: f64,
    /// Upper bound on the spectral radius of `A`.
    pub lambda_max: f64,
}

/// Upper bound on the spectral radius of a non-negative matrix.
///
/// Runs power iteration on `A + I` (positive diagonal removes periodicity)
/// and returns the Collatz-Wielandt bound `max_i ((A+I)x)_i / x_i − 1`,
/// which never underestimates the Perron root for a positive `x`.
pub fn spectral_radius_bound(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    if n == 0 || a.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    let abs = a.abs();
    let mut x = nalgebra::DVector::from_element(n, 1.0 / (n as f64).sqrt());
    for _ in 0..POWER_STEPS {
        let y = &abs * &x + &x;
        let norm = y.norm();
        x = y / norm;
    }
    let y = &abs * &x + &x;
    let bound = (0..n).map(|i| y[i] / x[i]).fold(f64::NEG_INFINITY, f64::max) - 1.0;
    bound.max(0.0)
}

/// Default attenuation: half the convergence limit.
pub fn default_alpha(lambda_max: f64) -> f64 {
    if lambda_max > 0.0 {
        0.5 / lambda_max
    } else {
        0.5
    }
}

/// Closed-form Katz matrix `S = (I − αA)^{-1} − I`, solved as
/// `(I − αA) S = αA`.
pub fn katz_matrix(a: &DMatrix<f64>, alpha: Option<f64>) -> Result<KatzMatrix> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::InvalidArgument("adjacency matrix must be square".into()));
    }
    let lambda_max = spectral_radius_bound(a);
    let alpha = alpha.unwrap_or_else(|| default_alpha(lambda_max));
    if !(alpha > 0.0) || alpha * lambda_max >= 1.0 {
        return Err(Error::Spectral(format!(
            "attenuation {alpha} must be positive and below 1/lambda_max = {}",
            if lambda_max > 0.0 { 1.0 / lambda_max } else { f64::INFINITY }
        )));
    }
    let scaled = a * alpha;
    let system = DMatrix::<f64>::identity(n, n) - &scaled;
    let s = system
        .lu()
        .solve(&scaled)
        .ok_or_else(|| Error::Spectral("I - alpha*A is singular".into()))?;
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::Spectral("Katz matrix has non-finite entries".into()));
    }
    let katz = KatzMatrix { s, alpha, lambda_max };
    let residual = katz.residual(a);
    if residual > RESIDUAL_LIMIT * (1.0 + katz.s.norm()) {
        return Err(Error::Spectral(format!("Katz system is ill-conditioned (residual {residual:e})")));
    }
    Ok(katz)
}

impl KatzMatrix {
    /// `‖S − αA(I + S)‖_F`
    pub fn residual(&self, a: &DMatrix<f64>) -> f64 {
        let n = a.nrows();
        let rhs = (a * self.alpha) * (DMatrix::<f64>::identity(n, n) + &self.s);
        (&self.s - rhs).norm()
    }
}

/// Source and target factors with `S ≈ Y_s Y_tᵀ`.
#[derive(Debug, Clone)]
pub struct HopeFactors {
    pub source: DMatrix<f64>,
    pub target: DMatrix<f64>,
    pub singular_values: Vec<f64>,
}

impl HopeFactors {
    pub fn reconstruction_error(&self, s: &DMatrix<f64>) -> f64 {
        (s - &self.source * self.target.transpose()).norm()
    }
}

/// Rank-`rank` factorization `Y_s = U√Σ`, `Y_t = V√Σ`.
pub fn hope_factors(s: &DMatrix<f64>, rank: usize, seed: u64) -> Result<HopeFactors> {
    let svd = truncated_svd(s, rank, &SvdOptions { seed, ..Default::default() })?;
    let mut source = svd.u;
    let mut target = svd.v;
    for (j, sv) in svd.singular_values.iter().enumerate() {
        let r = sv.sqrt();
        source.column_mut(j).scale_mut(r);
        target.column_mut(j).scale_mut(r);
    }
    Ok(HopeFactors { source, target, singular_values: svd.singular_values })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopeConfig {
    /// Total width; each half gets `dim / 2` columns.
    pub dim: usize,
    pub alpha: Option<f64>,
    pub seed: u64,
    pub dense_cap: usize,
}

impl Default for HopeConfig {
    fn default() -> Self {
        HopeConfig { dim: 128, alpha: None, seed: 0, dense_cap: DEFAULT_DENSE_CAP }
    }
}

/// HOPE over the directed graph: node vector = `[Y_s | Y_t]`.
pub fn hope_embed(graph: &CommGraph, config: &HopeConfig) -> Result<(EmbeddingSpace, KatzMatrix, HopeFactors)> {
    let half = config.dim / 2;
    if config.dim == 0 || !config.dim.is_multiple_of(2) {
        return Err(Error::Config(format!("HOPE dimension {} must be even and positive", config.dim)));
    }
    if half > graph.node_count() {
        return Err(Error::Config(format!("HOPE half-width {half} exceeds node count {}", graph.node_count())));
    }
    let a = graph.dense_adjacency(config.dense_cap)?;
    let katz = katz_matrix(&a, config.alpha)?;
    let factors = hope_factors(&katz.s, half, config.seed)?;
    let n = graph.node_count();
    let mut joined = DMatrix::zeros(n, config.dim);
    joined.columns_mut(0, half).copy_from(&factors.source);
    joined.columns_mut(half, half).copy_from(&factors.target);
    let space = EmbeddingSpace::from_matrix("hope", graph.ids().to_vec(), &joined, Metric::Cosine, SpaceKind::Network, config.seed)?;
    Ok((space, katz, factors))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nilpotent_series_truncates() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let k = katz_matrix(&a, Some(0.1)).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[0.0, 0.1, 0.0, 0.0]);
        assert!((&k.s - expect).norm() < 1e-15);
    }

    #[test]
    fn empty_graph_gives_zero_matrix() {
        let k = katz_matrix(&DMatrix::zeros(3, 3), None).unwrap();
        assert_eq!(k.s, DMatrix::zeros(3, 3));
    }

    #[test]
    fn spectral_bound_is_tight_on_cycle_and_clique() {
        let cycle = DMatrix::from_row_slice(3, 3, &[0., 1., 0., 0., 0., 1., 1., 0., 0.]);
        assert!((spectral_radius_bound(&cycle) - 1.0).abs() < 1e-9);
        let clique = DMatrix::from_fn(4, 4, |i, j| if i == j { 0.0 } else { 1.0 });
        assert!((spectral_radius_bound(&clique) - 3.0).abs() < 1e-9);
    }

    #[test]
    fn too_large_alpha_is_a_spectral_error() {
        let cycle = DMatrix::from_row_slice(2, 2, &[0., 1., 1., 0.]);
        assert!(matches!(katz_matrix(&cycle, Some(1.0)), Err(Error::Spectral(_))));
    }

    #[test]
    fn rank_one_katz_is_reconstructed() {
        let s = DMatrix::from_fn(4, 4, |i, j| (i + 1) as f64 * (j as f64 - 1.5));
        let f = hope_factors(&s, 1, 0).unwrap();
        assert!(f.reconstruction_error(&s) < 1e-10);
    }
}
