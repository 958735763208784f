//! Skip-gram with negative sampling over integer token sequences.
//!
//! The objective for one (center, context) pair is
//! `log σ(u·v_ctx) + Σ_neg log σ(−u·v_neg)`, maximized by SGD. Input vectors
//! `u` start uniform in `±0.5/D`, output vectors at zero, and the learning
//! rate decays linearly to `1e-4 * lr` over the run.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkipGramConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        SkipGramConfig { dim: 64, window: 10, negatives: 5, epochs: 5, lr: 0.025, seed: 0 }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Derivative of `log σ(±x)` with respect to `x`: `label − σ(x)`.
#[inline]
fn coefficient(dot: f64, positive: bool) -> f64 {
    (if positive { 1.0 } else { 0.0 }) - sigmoid(dot)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Objective of one pair (to be maximized).
pub fn pair_objective(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> f64 {
    log_sigmoid(dot(center, context)) + negatives.iter().map(|n| log_sigmoid(-dot(center, n))).sum::<f64>()
}

/// Gradients of [`pair_objective`]: with respect to the center vector, the
/// context vector and each negative vector.
pub fn pair_gradient(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
    let g_pos = coefficient(dot(center, context), true);
    let mut g_center: Vec<f64> = context.iter().map(|v| g_pos * v).collect();
    let g_context = center.iter().map(|u| g_pos * u).collect();
    let mut g_negs = Vec::with_capacity(negatives.len());
    for neg in negatives {
        let g = coefficient(dot(center, neg), false);
        for (gc, v) in g_center.iter_mut().zip(neg.iter()) {
            *gc += g * v;
        }
        g_negs.push(center.iter().map(|u| g * u).collect());
    }
    (g_center, g_context, g_negs)
}

/// Input and output embedding tables plus training state.
#[derive(Debug, Clone)]
pub struct SkipGramModel {
    pub dim: usize,
    pub vocab_size: usize,
    /// V x D input vectors, row-major.
    pub input: Vec<f64>,
    /// V x D output vectors, row-major.
    pub output: Vec<f64>,
    config: SkipGramConfig,
    noise: Option<WeightedIndex<f64>>,
    rng: ChaCha8Rng,
    total_pairs: u64,
    seen_pairs: u64,
}

impl SkipGramModel {
    pub fn new(corpus: &[Vec<usize>], vocab_size: usize, config: &SkipGramConfig) -> Result<Self> {
        if config.dim == 0 {
            return Err(Error::Config("skip-gram dimension must be at least 1".into()));
        }
        if corpus.iter().all(Vec::is_empty) {
            return Err(Error::Config("skip-gram corpus is empty".into()));
        }
        let mut freq = vec![0u64; vocab_size];
        for &tok in corpus.iter().flatten() {
            if tok >= vocab_size {
                return Err(Error::Config(format!("token {tok} outside vocabulary of {vocab_size}")));
            }
            freq[tok] += 1;
        }
        let weights: Vec<f64> = freq.iter().map(|&f| (f as f64).powf(0.75)).collect();
        let noise = WeightedIndex::new(&weights).ok();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let half = 0.5 / config.dim as f64;
        let input = (0..vocab_size * config.dim).map(|_| rng.random_range(-half..half)).collect();
        let pairs_per_epoch: u64 = corpus.iter().map(|w| pair_count(w.len(), config.window)).sum();
        Ok(SkipGramModel {
            dim: config.dim,
            vocab_size,
            input,
            output: vec![0.0; vocab_size * config.dim],
            config: *config,
            noise,
            rng,
            total_pairs: pairs_per_epoch * config.epochs.max(1) as u64,
            seen_pairs: 0,
        })
    }

    pub fn input_vector(&self, tok: usize) -> &[f64] {
        &self.input[tok * self.dim..(tok + 1) * self.dim]
    }

    pub fn output_vector(&self, tok: usize) -> &[f64] {
        &self.output[tok * self.dim..(tok + 1) * self.dim]
    }

    fn current_lr(&self) -> f64 {
        let progress = self.seen_pairs as f64 / self.total_pairs.max(1) as f64;
        self.config.lr * (1.0 - progress).max(1e-4)
    }

    /// One pass over the corpus. Returns the mean negated objective per pair.
    pub fn train_epoch(&mut self, corpus: &[Vec<usize>]) -> f64 {
        let d = self.dim;
        let window = self.config.window;
        let mut grad_center = vec![0.0; d];
        let mut loss = 0.0;
        let mut pairs = 0u64;
        for walk in corpus {
            for (pos, &center) in walk.iter().enumerate() {
                let lo = pos.saturating_sub(window);
                let hi = (pos + window + 1).min(walk.len());
                for (ctx_pos, &context) in walk.iter().enumerate().take(hi).skip(lo) {
                    if ctx_pos == pos {
                        continue;
                    }
                    let lr = self.current_lr();
                    grad_center.iter_mut().for_each(|g| *g = 0.0);
                    loss -= self.update(center, context, true, lr, &mut grad_center);
                    for _ in 0..self.config.negatives {
                        let Some(noise) = &self.noise else { break };
                        let neg = noise.sample(&mut self.rng);
                        if neg == context {
                            continue;
                        }
                        loss -= self.update(center, neg, false, lr, &mut grad_center);
                    }
                    let u = &mut self.input[center * d..(center + 1) * d];
                    for (x, g) in u.iter_mut().zip(&grad_center) {
                        *x += g;
                    }
                    pairs += 1;
                    self.seen_pairs += 1;
                }
            }
        }
        if pairs == 0 {
            0.0
        } else {
            loss / pairs as f64
        }
    }

    /// Accumulate the center gradient into `grad_center` and apply the
    /// output-vector update. Returns the pair's log-sigmoid term.
    fn update(&mut self, center: usize, target: usize, positive: bool, lr: f64, grad_center: &mut [f64]) -> f64 {
        let d = self.dim;
        let u = &self.input[center * d..(center + 1) * d];
        let v = &mut self.output[target * d..(target + 1) * d];
        let x = dot(u, v);
        let g = coefficient(x, positive) * lr;
        for i in 0..d {
            grad_center[i] += g * v[i];
            v[i] += g * u[i];
        }
        if positive {
            log_sigmoid(x)
        } else {
            log_sigmoid(-x)
        }
    }
}

fn pair_count(len: usize, window: usize) -> u64 {
    (0..len).map(|pos| (pos.min(window) + (len - 1 - pos).min(window)) as u64).sum()
}

/// Train for `config.epochs` epochs and return the V x D input vectors
/// (row-major) and the per-epoch mean losses.
pub fn skipgram_train(corpus: &[Vec<usize>], vocab_size: usize, config: &SkipGramConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut model = SkipGramModel::new(corpus, vocab_size, config)?;
    let mut losses = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        let loss = model.train_epoch(corpus);
        if !loss.is_finite() {
            return Err(Error::Training("skip-gram loss diverged; lower the learning rate".into()));
        }
        losses.push(loss);
    }
    if model.input.iter().any(|v| !v.is_finite()) {
        return Err(Error::Training("skip-gram produced non-finite vectors".into()));
    }
    Ok((model.input, losses))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn walk_of_length_one_has_no_pairs() {
        assert_eq!(pair_count(1, 5), 0);
        assert_eq!(pair_count(3, 1), 4);
        let corpus = vec![vec![0], vec![1, 2, 1]];
        let cfg = SkipGramConfig { dim: 4, epochs: 3, ..Default::default() };
        let init = SkipGramModel::new(&corpus, 3, &cfg).unwrap().input;
        let (trained, _) = skipgram_train(&corpus, 3, &cfg).unwrap();
        assert_eq!(&trained[0..4], &init[0..4]);
        assert_ne!(&trained[4..8], &init[4..8]);
    }

    #[test]
    fn repeated_pair_probability_rises_every_epoch() {
        let corpus = vec![vec![0, 1]; 20];
        let cfg = SkipGramConfig { dim: 8, window: 1, negatives: 2, epochs: 10, lr: 0.05, seed: 3 };
        let mut model = SkipGramModel::new(&corpus, 2, &cfg).unwrap();
        let prob = |m: &SkipGramModel| sigmoid(dot(m.input_vector(0), m.output_vector(1)));
        let mut last = prob(&model);
        for _ in 0..10 {
            model.train_epoch(&corpus);
            let now = prob(&model);
            assert!(now > last, "{now} <= {last}");
            last = now;
        }
    }

    #[test]
    fn empty_corpus_rejected() {
        assert!(SkipGramModel::new(&[vec![]], 2, &SkipGramConfig::default()).is_err());
    }

    #[test]
    fn log_sigmoid_is_stable() {
        assert!((log_sigmoid(0.0) - 0.5f64.ln()).abs() < 1e-15);
        assert!(log_sigmoid(-800.0).is_finite());
        assert!(log_sigmoid(800.0) <= 0.0);
    }
}
