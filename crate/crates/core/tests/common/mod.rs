//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's numerical code.

#![allow(dead_code)]

use std::cmp::Ordering;

use nalgebra::DMatrix;

/// Singular values by one-sided Jacobi rotations, descending.
pub fn jacobi_singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    let mut m = if a.nrows() >= a.ncols() { a.clone() } else { a.transpose() };
    let n = m.ncols();
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha: f64 = m.column(p).norm_squared();
                let beta: f64 = m.column(q).norm_squared();
                let gamma: f64 = m.column(p).dot(&m.column(q));
                if gamma == 0.0 {
                    continue;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt().max(f64::MIN_POSITIVE));
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m.nrows() {
                    let (x, y) = (m[(i, p)], m[(i, q)]);
                    m[(i, p)] = c * x - s * y;
                    m[(i, q)] = s * x + c * y;
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    let mut s: Vec<f64> = (0..n).map(|j| m.column(j).norm()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Frobenius error of the best rank-`r` approximation.
pub fn eckart_young_error(singular_values: &[f64], r: usize) -> f64 {
    singular_values.iter().skip(r).map(|s| s * s).sum::<f64>().sqrt()
}

/// Partial sums `Σ_{k=1..terms} α^k A^k`.
pub fn katz_series(a: &DMatrix<f64>, alpha: f64, terms: usize) -> DMatrix<f64> {
    let n = a.nrows();
    let mut power = DMatrix::<f64>::identity(n, n);
    let mut sum = DMatrix::<f64>::zeros(n, n);
    for _ in 0..terms {
        power = (&power * a) * alpha;
        sum += &power;
    }
    sum
}

pub enum OracleMetric {
    Cosine,
    Euclidean,
}

fn oracle_distance(metric: &OracleMetric, a: &[f64], b: &[f64]) -> f64 {
    match metric {
        OracleMetric::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
        OracleMetric::Cosine => {
            let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
            for (x, y) in a.iter().zip(b) {
                dot += x * y;
                na += x * x;
                nb += y * y;
            }
            if na == 0.0 || nb == 0.0 {
                1.0
            } else {
                1.0 - dot / (na.sqrt() * nb.sqrt())
            }
        }
    }
}

/// Full sort of every non-seed point by aggregated distance, ties by id.
pub fn brute_force_knn(
    ids: &[String],
    rows: &[Vec<f64>],
    metric: &OracleMetric,
    seeds: &[usize],
    k: usize,
    min_dist: bool,
) -> Vec<String> {
    let scores: Vec<f64> = if min_dist {
        rows.iter()
            .map(|r| seeds.iter().map(|&s| oracle_distance(metric, &rows[s], r)).fold(f64::INFINITY, f64::min))
            .collect()
    } else {
        let mut distinct = seeds.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        let mut centroid = vec![0.0; rows[0].len()];
        for &s in &distinct {
            for (c, x) in centroid.iter_mut().zip(&rows[s]) {
                *c += x;
            }
        }
        let inv = 1.0 / distinct.len() as f64;
        centroid.iter_mut().for_each(|c| *c *= inv);
        rows.iter().map(|r| oracle_distance(metric, &centroid, r)).collect()
    };
    let mut order: Vec<usize> = (0..ids.len()).filter(|i| !seeds.contains(i)).collect();
    order.sort_by(|&a, &b| match scores[a].partial_cmp(&scores[b]).unwrap() {
        Ordering::Equal => ids[a].cmp(&ids[b]),
        o => o,
    });
    order.into_iter().take(k).map(|i| ids[i].clone()).collect()
}

/// Central finite difference of `f` along coordinate `i` of `x`.
pub fn central_difference(f: &dyn Fn(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
    let mut plus = x.to_vec();
    let mut minus = x.to_vec();
    plus[i] += h;
    minus[i] -= h;
    (f(&plus) - f(&minus)) / (2.0 * h)
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    if scale < 1e-10 {
        (analytic - numeric).abs()
    } else {
        (analytic - numeric).abs() / scale
    }
}

/// Lloyd's 2-means on 2-D points, started from the two mutually farthest
/// points. Returns a cluster id per point.
pub fn two_means(points: &[(f64, f64)]) -> Vec<usize> {
    let d2 = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2);
    let mut best = (0, 0, -1.0);
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let d = d2(points[i], points[j]);
            if d > best.2 {
                best = (i, j, d);
            }
        }
    }
    let mut centers = [points[best.0], points[best.1]];
    let mut assign = vec![0; points.len()];
    for _ in 0..100 {
        let next: Vec<usize> =
            points.iter().map(|&p| if d2(p, centers[0]) <= d2(p, centers[1]) { 0 } else { 1 }).collect();
        for (c, center) in centers.iter_mut().enumerate() {
            let members: Vec<&(f64, f64)> = points.iter().zip(&next).filter(|(_, &a)| a == c).map(|(p, _)| p).collect();
            if !members.is_empty() {
                let n = members.len() as f64;
                *center = (members.iter().map(|p| p.0).sum::<f64>() / n, members.iter().map(|p| p.1).sum::<f64>() / n);
            }
        }
        if next == assign {
            break;
        }
        assign = next;
    }
    assign
}

/// Label agreement up to swapping the two cluster names.
pub fn cluster_agreement(assign: &[usize], truth: &[usize]) -> f64 {
    let same = assign.iter().zip(truth).filter(|(a, t)| a == t).count();
    let n = assign.len();
    same.max(n - same) as f64 / n as f64
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}
