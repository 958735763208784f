//! Named per-account vector spaces and their text file format.
//!
//! File layout: a header line `BME1 <name> <N> <D> <metric>` optionally
//! followed by `kind=<kind> seed=<seed>` tokens, then one line per account,
//! `account_id v1 ... vD`, each value printed with 9 significant digits.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Cosine,
    Euclidean,
    /// Hellinger distance between probability vectors.
    Hellinger,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Cosine => "cosine",
            Metric::Euclidean => "euclidean",
            Metric::Hellinger => "hellinger",
        }
    }

    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Cosine => cosine_distance(a, b),
            Metric::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
            Metric::Hellinger => {
                let s: f64 = a
                    .iter()
                    .zip(b)
                    .map(|(x, y)| {
                        let d = x.max(0.0).sqrt() - y.max(0.0).sqrt();
                        d * d
                    })
                    .sum();
                (s / 2.0).sqrt()
            }
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(Metric::Cosine),
            "euclidean" => Ok(Metric::Euclidean),
            "hellinger" => Ok(Metric::Hellinger),
            other => Err(Error::Format(format!("unknown metric '{other}'"))),
        }
    }
}

/// Cosine similarity; zero when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na.sqrt() * nb.sqrt())
    }
}

pub fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    1.0 - cosine(a, b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceKind {
    Content,
    Network,
    Fused,
    Ranked,
}

impl SpaceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SpaceKind::Content => "content",
            SpaceKind::Network => "network",
            SpaceKind::Fused => "fused",
            SpaceKind::Ranked => "ranked",
        }
    }
}

impl fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SpaceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "content" => Ok(SpaceKind::Content),
            "network" => Ok(SpaceKind::Network),
            "fused" => Ok(SpaceKind::Fused),
            "ranked" => Ok(SpaceKind::Ranked),
            other => Err(Error::Format(format!("unknown space kind '{other}'"))),
        }
    }
}

/// Row-major N x D matrix of account vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSpace {
    name: String,
    ids: Vec<String>,
    index: HashMap<String, usize>,
    dim: usize,
    data: Vec<f64>,
    metric: Metric,
    kind: SpaceKind,
    seed: u64,
}

impl EmbeddingSpace {
    pub fn new(
        name: impl Into<String>,
        ids: Vec<String>,
        dim: usize,
        data: Vec<f64>,
        metric: Metric,
        kind: SpaceKind,
        seed: u64,
    ) -> Result<Self> {
        let name = name.into();
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(Error::InvalidArgument(format!("space name '{name}' must be non-empty without whitespace")));
        }
        if dim == 0 {
            return Err(Error::InvalidArgument("embedding dimension must be at least 1".into()));
        }
        if kind == SpaceKind::Ranked && dim != 1 {
            return Err(Error::InvalidArgument("ranked spaces hold a single score per account".into()));
        }
        if data.len() != ids.len() * dim {
            return Err(Error::InvalidArgument(format!(
                "{} values do not fill {} rows of width {dim}",
                data.len(),
                ids.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Training(format!("non-finite value in row {} of space '{name}'", pos / dim)));
        }
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if id.is_empty() || id.chars().any(char::is_whitespace) {
                return Err(Error::InvalidArgument(format!("account id '{id}' is empty or has whitespace")));
            }
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate account id '{id}'")));
            }
        }
        Ok(EmbeddingSpace { name, ids, index, dim, data, metric, kind, seed })
    }

    pub fn from_matrix(
        name: impl Into<String>,
        ids: Vec<String>,
        m: &DMatrix<f64>,
        metric: Metric,
        kind: SpaceKind,
        seed: u64,
    ) -> Result<Self> {
        let data = (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)])).collect();
        Self::new(name, ids, m.ncols(), data, metric, kind, seed)
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.len(), self.dim, &self.data)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vector(&self, id: &str) -> Option<&[f64]> {
        self.index_of(id).map(|i| self.row(i))
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        let metric = if self.kind == SpaceKind::Ranked { "ranked" } else { self.metric.as_str() };
        writeln!(
            out,
            "BME1 {} {} {} {} kind={} seed={}",
            self.name,
            self.len(),
            self.dim,
            metric,
            self.kind,
            self.seed
        )?;
        let mut line = String::new();
        for i in 0..self.len() {
            line.clear();
            line.push_str(&self.ids[i]);
            for &v in self.row(i) {
                line.push(' ');
                line.push_str(&format_sig9(v));
            }
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn read<R: Read>(input: R) -> Result<Self> {
        let mut lines = BufReader::new(input).lines();
        let header = lines.next().ok_or_else(|| Error::Format("empty embedding file".into()))??;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() < 5 || fields[0] != "BME1" {
            return Err(Error::Format(format!("bad embedding header '{header}'")));
        }
        let name = fields[1].to_string();
        let n: usize = fields[2].parse().map_err(|_| Error::Format(format!("bad row count '{}'", fields[2])))?;
        let dim: usize = fields[3].parse().map_err(|_| Error::Format(format!("bad dimension '{}'", fields[3])))?;
        let (mut metric, mut kind) = match fields[4] {
            "ranked" => (Metric::Euclidean, SpaceKind::Ranked),
            m => (m.parse()?, SpaceKind::Content),
        };
        let mut seed = 0;
        for extra in &fields[5..] {
            match extra.split_once('=') {
                Some(("kind", k)) => kind = k.parse()?,
                Some(("seed", s)) => seed = s.parse().map_err(|_| Error::Format(format!("bad seed '{s}'")))?,
                _ => return Err(Error::Format(format!("unknown header token '{extra}'"))),
            }
        }
        if kind == SpaceKind::Ranked {
            metric = Metric::Euclidean;
        }
        let mut ids = Vec::with_capacity(n);
        let mut data = Vec::with_capacity(n * dim);
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let id = parts.next().unwrap().to_string();
            let before = data.len();
            for p in parts {
                data.push(p.parse::<f64>().map_err(|_| Error::Format(format!("line {}: bad value '{p}'", lineno + 2)))?);
            }
            if data.len() - before != dim {
                return Err(Error::Format(format!("line {}: expected {dim} values", lineno + 2)));
            }
            ids.push(id);
        }
        if ids.len() != n {
            return Err(Error::Format(format!("header declares {n} rows, found {}", ids.len())));
        }
        Self::new(name, ids, dim, data, metric, kind, seed).map_err(|e| Error::Format(e.to_string()))
    }
}

/// Plain decimal notation rounded to 9 significant digits.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    let decimals = (8 - exp).max(0) as usize;
    let s = if exp > 8 {
        let scale = 10f64.powi(exp - 8);
        format!("{:.0}", (v / scale).round() * scale)
    } else {
        format!("{v:.decimals$}")
    };
    let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.').to_string() } else { s };
    if s == "-0" {
        "0".to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space() -> EmbeddingSpace {
        EmbeddingSpace::new(
            "demo",
            vec!["a".into(), "b".into()],
            2,
            vec![0.5, -1.25, 3.0, 1e-7],
            Metric::Cosine,
            SpaceKind::Network,
            7,
        )
        .unwrap()
    }

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_sig9(0.0), "0");
        assert_eq!(format_sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(format_sig9(-123.456789012), "-123.456789");
        assert_eq!(format_sig9(2.5e-5), "0.000025");
        assert_eq!(format_sig9(1234567891234.0), "1234567890000");
    }

    #[test]
    fn header_and_rows() {
        let mut buf = Vec::new();
        space().write(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "BME1 demo 2 2 cosine kind=network seed=7");
        assert_eq!(lines.next().unwrap(), "a 0.5 -1.25");
        assert_eq!(lines.next().unwrap(), "b 3 0.0000001");
    }

    #[test]
    fn read_back_and_bare_header() {
        let mut buf = Vec::new();
        space().write(&mut buf).unwrap();
        assert_eq!(EmbeddingSpace::read(&buf[..]).unwrap(), space());
        let bare = "BME1 x 1 3 euclidean\nq 1 2 3\n";
        let s = EmbeddingSpace::read(bare.as_bytes()).unwrap();
        assert_eq!((s.dim(), s.metric(), s.kind()), (3, Metric::Euclidean, SpaceKind::Content));
    }

    #[test]
    fn rejects_non_finite_and_bad_shapes() {
        let err = EmbeddingSpace::new("x", vec!["a".into()], 1, vec![f64::NAN], Metric::Cosine, SpaceKind::Content, 0);
        assert!(err.is_err());
        assert!(EmbeddingSpace::new("x", vec!["a".into()], 2, vec![1.0], Metric::Cosine, SpaceKind::Content, 0).is_err());
        assert!(EmbeddingSpace::read("BME1 x 2 1 cosine\na 1\n".as_bytes()).is_err());
    }

    #[test]
    fn distances() {
        assert!((Metric::Cosine.distance(&[1.0, 0.0], &[0.0, 2.0]) - 1.0).abs() < 1e-15);
        assert_eq!(Metric::Euclidean.distance(&[0.0, 0.0], &[3.0, 4.0]), 5.0);
        assert!((Metric::Hellinger.distance(&[1.0, 0.0], &[0.0, 1.0]) - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 1.0]), 0.0);
    }
}
