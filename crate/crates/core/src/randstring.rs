//! Detector for randomly generated screen names.
//!
//! Names are featurized as signed, hashed character 1-, 2- and 3-gram
//! frequencies plus four summary statistics, and scored with logistic
//! regression trained by SGD.

use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Width of the hashed n-gram block.
pub const HASH_WIDTH: usize = 4096;
/// Length of a full feature vector: n-grams then entropy, length, digit
/// ratio and case transitions.
pub const FEATURE_DIM: usize = HASH_WIDTH + 4;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NameFeatures {
    /// Sparse `(bucket, value)` pairs, sorted by bucket.
    pub ngrams: Vec<(usize, f64)>,
    /// Shannon entropy of the character distribution, in bits,
    /// case-sensitive.
    pub entropy: f64,
    pub length: usize,
    pub digit_ratio: f64,
    /// Adjacent letter pairs whose case differs.
    pub case_transitions: usize,
}

impl NameFeatures {
    /// Model input: n-gram block followed by the scaled summary statistics
    /// `entropy / 6`, `length / 32`, `digit_ratio` and
    /// `case_transitions / length`.
    pub fn to_sparse(&self) -> Vec<(usize, f64)> {
        let mut v = self.ngrams.clone();
        let len = self.length as f64;
        v.push((HASH_WIDTH, self.entropy / 6.0));
        v.push((HASH_WIDTH + 1, len / 32.0));
        v.push((HASH_WIDTH + 2, self.digit_ratio));
        v.push((HASH_WIDTH + 3, self.case_transitions as f64 / len));
        v
    }
}

/// Each n-gram of order 1 to 3 hashes (FNV-1a 64 over the order byte and the
/// UTF-8 bytes) to bucket `h mod 4096` with sign `+1` when bit 63 is clear.
/// Values are counts divided by the number of n-grams of that order.
pub fn featurize(name: &str) -> Result<NameFeatures> {
    let chars: Vec<char> = name.chars().collect();
    if chars.is_empty() {
        return Err(Error::InvalidArgument("screen name is empty".into()));
    }
    let n = chars.len();
    let mut buckets = vec![0.0; HASH_WIDTH];
    let mut buf = Vec::new();
    for order in 1..=3usize {
        if n < order {
            break;
        }
        let total = (n - order + 1) as f64;
        for window in chars.windows(order) {
            buf.clear();
            buf.push(order as u8);
            for c in window {
                let mut tmp = [0u8; 4];
                buf.extend_from_slice(c.encode_utf8(&mut tmp).as_bytes());
            }
            let h = fnv1a(&buf);
            let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
            buckets[(h % HASH_WIDTH as u64) as usize] += sign / total;
        }
    }
    let ngrams = buckets.into_iter().enumerate().filter(|(_, v)| *v != 0.0).collect();

    let mut counts = std::collections::BTreeMap::new();
    for &c in &chars {
        *counts.entry(c).or_insert(0usize) += 1;
    }
    let entropy = counts
        .values()
        .map(|&k| {
            let p = k as f64 / n as f64;
            -p * p.log2()
        })
        .sum::<f64>()
        .max(0.0);
    let digits = chars.iter().filter(|c| c.is_numeric()).count();
    let case_transitions = chars
        .windows(2)
        .filter(|w| {
            w[0].is_alphabetic()
                && w[1].is_alphabetic()
                && (w[0].is_uppercase() != w[1].is_uppercase() || w[0].is_lowercase() != w[1].is_lowercase())
        })
        .count();
    Ok(NameFeatures { ngrams, entropy, length: n, digit_ratio: digits as f64 / n as f64, case_transitions })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub l2: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { lr: 0.5, epochs: 10, l2: 1e-5, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub config: TrainConfig,
    /// Mean regularized training loss after each epoch.
    pub losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: Vec<(usize, f64)>,
    pub positive: bool,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn sparse_dot(w: &[f64], x: &[(usize, f64)]) -> f64 {
    x.iter().map(|&(i, v)| w[i] * v).sum()
}

impl LogisticModel {
    pub fn zeros(dim: usize) -> Self {
        LogisticModel { weights: vec![0.0; dim], bias: 0.0, config: TrainConfig::default(), losses: Vec::new() }
    }

    pub fn score(&self, features: &[(usize, f64)]) -> f64 {
        sigmoid(sparse_dot(&self.weights, features) + self.bias)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: LogisticModel = serde_json::from_str(s)?;
        if m.weights.iter().any(|w| !w.is_finite()) || !m.bias.is_finite() {
            return Err(Error::Format("model has non-finite weights".into()));
        }
        Ok(m)
    }
}

fn mean_loss(weights: &[f64], bias: f64, samples: &[Sample], l2: f64) -> f64 {
    let data: f64 = samples
        .iter()
        .map(|s| {
            let z = sparse_dot(weights, &s.features) + bias;
            // log(1 + e^{-yz}) with y in {-1, +1}
            let m = if s.positive { -z } else { z };
            if m > 0.0 {
                m + (-m).exp().ln_1p()
            } else {
                m.exp().ln_1p()
            }
        })
        .sum::<f64>()
        / samples.len() as f64;
    data + 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>()
}

/// SGD on the L2-regularized logistic loss over sparse samples. Weights
/// start at zero; samples are visited in a fresh seeded shuffle each epoch.
/// The L2 shrink is applied lazily through a global scale factor.
pub fn train_samples(samples: &[Sample], dim: usize, config: &TrainConfig) -> Result<LogisticModel> {
    if !samples.iter().any(|s| s.positive) || !samples.iter().any(|s| !s.positive) {
        return Err(Error::InvalidArgument("training needs both positive and negative examples".into()));
    }
    if let Some(bad) = samples.iter().flat_map(|s| &s.features).find(|(i, _)| *i >= dim) {
        return Err(Error::InvalidArgument(format!("feature index {} outside dimension {dim}", bad.0)));
    }
    let mut raw = vec![0.0; dim];
    let mut scale = 1.0;
    let mut bias = 0.0;
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let shrink = 1.0 - config.lr * config.l2;
    let mut losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let s = &samples[i];
            let z = scale * sparse_dot(&raw, &s.features) + bias;
            let g = sigmoid(z) - if s.positive { 1.0 } else { 0.0 };
            scale *= shrink;
            let step = config.lr * g / scale;
            for &(j, v) in &s.features {
                raw[j] -= step * v;
            }
            bias -= config.lr * g;
            if scale < 1e-9 {
                raw.iter_mut().for_each(|w| *w *= scale);
                scale = 1.0;
            }
        }
        let weights: Vec<f64> = raw.iter().map(|w| w * scale).collect();
        let loss = mean_loss(&weights, bias, samples, config.l2);
        if !loss.is_finite() || !bias.is_finite() {
            return Err(Error::Training(format!("logistic regression diverged in epoch {epoch}")));
        }
        losses.push(loss);
    }
    let weights = raw.iter().map(|w| w * scale).collect();
    Ok(LogisticModel { weights, bias, config: *config, losses })
}

/// Train on screen names; `positive` holds random-string names.
pub fn train<S: AsRef<str>>(positive: &[S], negative: &[S], config: &TrainConfig) -> Result<LogisticModel> {
    if positive.is_empty() || negative.is_empty() {
        return Err(Error::InvalidArgument("both classes need at least one name".into()));
    }
    let mut samples = Vec::with_capacity(positive.len() + negative.len());
    for (names, label) in [(positive, true), (negative, false)] {
        for n in names {
            samples.push(Sample { features: featurize(n.as_ref())?.to_sparse(), positive: label });
        }
    }
    train_samples(&samples, FEATURE_DIM, config)
}

/// Probability that `name` is a random string.
pub fn predict(model: &LogisticModel, name: &str) -> Result<f64> {
    if model.weights.len() != FEATURE_DIM {
        return Err(Error::InvalidArgument(format!(
            "model has {} weights, name features need {FEATURE_DIM}",
            model.weights.len()
        )));
    }
    Ok(model.score(&featurize(name)?.to_sparse()))
}

/// Score one name per input line, writing `name,probability`. Blank lines
/// are skipped.
pub fn predict_batch<R: BufRead, W: Write>(model: &LogisticModel, input: R, out: W) -> Result<usize> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["name", "probability"])?;
    let mut count = 0;
    for line in input.lines() {
        let line = line?;
        let name = line.trim();
        if name.is_empty() {
            continue;
        }
        let p = predict(model, name)?;
        w.write_record([name, &format!("{p:.6}")])?;
        count += 1;
    }
    w.flush()?;
    Ok(count)
}

const ALPHANUMERIC: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789";

const WORDS: &[&str] = &[
    "ahmed", "ali", "amal", "angel", "apple", "art", "baby", "bear", "best", "big", "bird", "black", "blue", "book",
    "boss", "boy", "bright", "city", "cloud", "cool", "crazy", "cyber", "dark", "daily", "dream", "eagle", "earth",
    "east", "fan", "fast", "fire", "flower", "fox", "free", "friend", "funny", "game", "girl", "gold", "good", "green",
    "happy", "heart", "hero", "home", "hope", "hunter", "ice", "iron", "jack", "jazz", "joy", "king", "lady", "life",
    "light", "lion", "little", "live", "love", "lucky", "magic", "mama", "man", "maria", "master", "media", "mike",
    "moon", "music", "news", "night", "noor", "ocean", "official", "omar", "one", "peace", "pink", "pixel", "player",
    "power", "prince", "queen", "rain", "real", "red", "river", "rock", "rose", "sam", "sara", "sea", "shadow", "silver",
    "sky", "smile", "snow", "soul", "star", "storm", "summer", "sun", "super", "sweet", "team", "the", "tiger", "time",
    "top", "travel", "true", "voice", "war", "water", "west", "white", "wild", "wind", "wolf", "world", "yemen", "young",
];

/// Uniform alphanumeric string of `len` characters.
pub fn random_handle<R: Rng + ?Sized>(rng: &mut R, len: usize) -> String {
    (0..len).map(|_| ALPHANUMERIC[rng.random_range(0..ALPHANUMERIC.len())] as char).collect()
}

/// One to three dictionary words, lower, Capitalized or camel case,
/// optionally joined by underscores, followed by up to four digits.
pub fn dictionary_handle<R: Rng + ?Sized>(rng: &mut R) -> String {
    let words = rng.random_range(1..=3);
    let style = rng.random_range(0..3);
    let underscore = rng.random_bool(0.3);
    let mut out = String::new();
    for i in 0..words {
        if i > 0 && underscore {
            out.push('_');
        }
        let w = WORDS[rng.random_range(0..WORDS.len())];
        let capitalize = match style {
            0 => false,
            1 => i == 0,
            _ => true,
        };
        if capitalize {
            let mut cs = w.chars();
            if let Some(first) = cs.next() {
                out.extend(first.to_uppercase());
                out.push_str(cs.as_str());
            }
        } else {
            out.push_str(w);
        }
    }
    for _ in 0..rng.random_range(0..=4) {
        out.push(char::from(b'0' + rng.random_range(0..10u8)));
    }
    out
}

/// Labeled benchmark: `n` random 15-character strings and `n` dictionary
/// handles.
pub fn gen_benchmark(n: usize, seed: u64) -> (Vec<String>, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pos = (0..n).map(|_| random_handle(&mut rng, 15)).collect();
    let neg = (0..n).map(|_| dictionary_handle(&mut rng)).collect();
    (pos, neg)
}

/// The model used when no trained model is supplied: trained on a fixed
/// 2,000-name benchmark.
pub fn default_model() -> LogisticModel {
    let (pos, neg) = gen_benchmark(1000, 0x5eed);
    train(&pos, &neg, &TrainConfig::default()).expect("built-in benchmark trains")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_examples() {
        assert_eq!(featurize("aaaaa").unwrap().entropy, 0.0);
        assert!((featurize("ab").unwrap().entropy - 1.0).abs() < 1e-12);
        assert!(featurize("").is_err());
    }

    #[test]
    fn statistics() {
        let f = featurize("aB3cD").unwrap();
        assert_eq!(f.length, 5);
        assert!((f.digit_ratio - 0.2).abs() < 1e-12);
        assert_eq!(f.case_transitions, 2);
        assert_eq!(featurize("aBcD").unwrap().case_transitions, 3);
    }

    #[test]
    fn zero_model_is_half() {
        let m = LogisticModel::zeros(FEATURE_DIM);
        assert_eq!(predict(&m, "whatever").unwrap(), 0.5);
    }

    #[test]
    fn separable_toy_set_is_learned() {
        let samples: Vec<Sample> = (0..20)
            .map(|i| Sample { features: vec![(0, if i < 10 { 1.0 } else { -1.0 })], positive: i < 10 })
            .collect();
        let m = train_samples(&samples, 1, &TrainConfig { epochs: 20, ..Default::default() }).unwrap();
        assert!(samples.iter().all(|s| (m.score(&s.features) > 0.5) == s.positive));
    }

    #[test]
    fn flipped_labels_negate_weights() {
        let (pos, neg) = gen_benchmark(50, 2);
        let cfg = TrainConfig { epochs: 3, ..Default::default() };
        let mut samples: Vec<Sample> = Vec::new();
        for (names, label) in [(&pos, true), (&neg, false)] {
            samples.extend(names.iter().map(|n| Sample { features: featurize(n).unwrap().to_sparse(), positive: label }));
        }
        let flipped: Vec<Sample> = samples.iter().map(|s| Sample { features: s.features.clone(), positive: !s.positive }).collect();
        let w1 = train_samples(&samples, FEATURE_DIM, &cfg).unwrap();
        let w2 = train_samples(&flipped, FEATURE_DIM, &cfg).unwrap();
        let sum: f64 = w1.weights.iter().zip(&w2.weights).map(|(x, y)| (x + y) * (x + y)).sum::<f64>().sqrt();
        assert!(sum < 1e-3, "{sum}");
        assert!((w1.bias + w2.bias).abs() < 1e-9);
        assert_eq!(train(&pos, &neg, &cfg).unwrap().weights, w1.weights);
    }

    #[test]
    fn batch_output() {
        let m = LogisticModel::zeros(FEATURE_DIM);
        let mut out = Vec::new();
        let n = predict_batch(&m, &b"abc\n\nxyz\n"[..], &mut out).unwrap();
        assert_eq!(n, 2);
        assert_eq!(String::from_utf8(out).unwrap(), "name,probability\nabc,0.500000\nxyz,0.500000\n");
    }
}
