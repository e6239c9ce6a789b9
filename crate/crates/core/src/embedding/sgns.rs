//! Skip-gram with negative sampling.

use std::collections::HashMap;

use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::{EmbeddingTable, TokenSequence};
use crate::linalg::{axpy, dot};
use crate::{Error, Result};

/// Noise distribution exponent applied to unigram counts.
const NOISE_POWER: f64 = 0.75;

/// Floor of the linearly decayed learning rate, as a fraction of the start.
const MIN_LR_FRACTION: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct SkipGramConfig {
    pub dim: usize,
    /// Maximum distance between center and context; each center samples an
    /// effective window uniformly from `1..=window`.
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    /// Starting learning rate, decayed linearly to zero over training.
    pub learning_rate: f64,
    pub min_count: u64,
    pub seed: u64,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        SkipGramConfig { dim: 32, window: 5, negatives: 5, epochs: 5, learning_rate: 0.025, min_count: 1, seed: 1 }
    }
}

#[derive(Debug, Clone)]
pub struct SkipGramRun {
    pub table: EmbeddingTable,
    /// Mean pair loss of each epoch, measured before each update.
    pub epoch_losses: Vec<f64>,
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Returns `(label - σ(f), loss)` for one output with score `f`.
fn pair_term(f: f64, positive: bool) -> (f64, f64) {
    if positive {
        (1.0 - sigmoid(f), softplus(-f))
    } else {
        (-sigmoid(f), softplus(f))
    }
}

/// `-log σ(u·v) - Σ_k log σ(-u·v_k)`
pub fn sgns_pair_loss(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> f64 {
    let mut loss = pair_term(dot(center, context), true).1;
    for neg in negatives {
        loss += pair_term(dot(center, neg), false).1;
    }
    loss
}

/// Gradients of [`sgns_pair_loss`] with respect to each vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGradients {
    pub center: Vec<f64>,
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

pub fn sgns_pair_gradients(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> PairGradients {
    let mut d_center = vec![0.0; center.len()];
    let (g, _) = pair_term(dot(center, context), true);
    axpy(-g, context, &mut d_center);
    let d_context = center.iter().map(|u| -g * u).collect();
    let d_negatives = negatives
        .iter()
        .map(|neg| {
            let (g, _) = pair_term(dot(center, neg), false);
            axpy(-g, neg, &mut d_center);
            center.iter().map(|u| -g * u).collect()
        })
        .collect();
    PairGradients { center: d_center, context: d_context, negatives: d_negatives }
}

/// One SGD step on a (center, outputs) pair; returns the pre-update loss.
/// Output vectors are updated with gradients taken at the pre-update center,
/// then the center moves by the accumulated gradient.
fn sgd_step(
    center: &mut [f64],
    outputs: &mut [f64],
    dim: usize,
    targets: &[(usize, bool)],
    lr: f64,
    scratch: &mut [f64],
) -> f64 {
    scratch.iter_mut().for_each(|x| *x = 0.0);
    let mut loss = 0.0;
    for &(idx, positive) in targets {
        let out = &mut outputs[idx * dim..(idx + 1) * dim];
        let (g, l) = pair_term(dot(center, out), positive);
        loss += l;
        axpy(g, out, scratch);
        axpy(lr * g, center, out);
    }
    axpy(lr, scratch, center);
    loss
}

/// Trains input vectors over all tokens seen at least `min_count` times.
/// Deterministic for a given seed: sequence order is a seeded permutation per
/// epoch and a single worker applies the updates.
pub fn train_skipgram(sequences: &[TokenSequence], cfg: &SkipGramConfig) -> Result<SkipGramRun> {
    if cfg.dim == 0 || cfg.window == 0 || cfg.epochs == 0 {
        return Err(Error::Config("skip-gram dim, window and epochs must be positive".into()));
    }
    if !(cfg.learning_rate >= 0.0 && cfg.learning_rate.is_finite()) {
        return Err(Error::Config(format!(
            "skip-gram learning rate {} must be finite and non-negative",
            cfg.learning_rate
        )));
    }

    let mut counts: HashMap<&str, u64> = HashMap::new();
    for seq in sequences {
        for t in &seq.tokens {
            *counts.entry(t.as_str()).or_default() += 1;
        }
    }
    let mut vocab: Vec<(&str, u64)> = counts.into_iter().filter(|&(_, c)| c >= cfg.min_count).collect();
    vocab.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    if vocab.len() < 2 {
        return Err(Error::Config(format!(
            "effective vocabulary has {} token(s); skip-gram needs at least two",
            vocab.len()
        )));
    }
    let index: HashMap<&str, usize> = vocab.iter().enumerate().map(|(i, (t, _))| (*t, i)).collect();

    let corpus: Vec<Vec<usize>> = sequences
        .iter()
        .map(|s| s.tokens.iter().filter_map(|t| index.get(t.as_str()).copied()).collect())
        .filter(|s: &Vec<usize>| s.len() >= 2)
        .collect();
    if corpus.is_empty() {
        return Err(Error::Config("no sequence has two in-vocabulary tokens; nothing to train on".into()));
    }

    let dim = cfg.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let half = 0.5 / dim as f64;
    let mut input: Vec<f64> = (0..vocab.len() * dim).map(|_| rng.random_range(-half..half)).collect();
    let mut output = vec![0.0; vocab.len() * dim];
    let noise =
        WeightedIndex::new(vocab.iter().map(|&(_, c)| (c as f64).powf(NOISE_POWER))).expect("counts are positive");

    let corpus_tokens: usize = corpus.iter().map(Vec::len).sum();
    let total = (cfg.epochs * corpus_tokens) as f64;
    let mut processed = 0usize;
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut targets: Vec<(usize, bool)> = Vec::with_capacity(cfg.negatives + 1);
    let mut scratch = vec![0.0; dim];
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut pairs) = (0.0, 0usize);
        for &s in &order {
            let seq = &corpus[s];
            for pos in 0..seq.len() {
                let lr = cfg.learning_rate * (1.0 - processed as f64 / total).max(MIN_LR_FRACTION);
                let span = cfg.window - rng.random_range(0..cfg.window);
                let lo = pos.saturating_sub(span);
                let hi = (pos + span).min(seq.len() - 1);
                let center = seq[pos];
                for c in (lo..=hi).filter(|&c| c != pos) {
                    let context = seq[c];
                    targets.clear();
                    targets.push((context, true));
                    for _ in 0..cfg.negatives {
                        let neg = noise.sample(&mut rng);
                        if neg != context {
                            targets.push((neg, false));
                        }
                    }
                    let center_vec = &mut input[center * dim..(center + 1) * dim];
                    loss_sum += sgd_step(center_vec, &mut output, dim, &targets, lr, &mut scratch);
                    pairs += 1;
                }
                processed += 1;
            }
        }
        epoch_losses.push(if pairs == 0 { 0.0 } else { loss_sum / pairs as f64 });
    }

    if input.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("skip-gram diverged to non-finite vectors; lower the learning rate".into()));
    }
    let tokens = vocab.iter().map(|(t, _)| t.to_string()).collect();
    let freq = vocab.iter().map(|&(_, c)| c).collect();
    let table = EmbeddingTable::from_parts(dim, tokens, input, Some(freq))?;
    Ok(SkipGramRun { table, epoch_losses })
}
