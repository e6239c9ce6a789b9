//! Mini-batch training of the scorer with plain SGD or Adam.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::network::{accumulate_gradients, forward, loss, TrainingSample};
use super::ModelParams;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Optimizer {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Optimizer {
    pub fn adam() -> Self {
        Optimizer::Adam { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Optimizer::Sgd => "sgd",
            Optimizer::Adam { .. } => "adam",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    /// Drives the per-epoch shuffle.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 10, batch_size: 256, learning_rate: 1e-3, optimizer: Optimizer::adam(), seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    /// 1-based.
    pub epoch: usize,
    /// Mean loss over the training set after the epoch's updates.
    pub train_loss: f64,
    /// Mean validation loss, `None` without a validation set.
    pub valid_loss: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainRun {
    /// Parameters after the epoch with the lowest validation loss (training
    /// loss when there is no validation set); earliest epoch on ties.
    pub params: ModelParams,
    pub best_epoch: usize,
    pub history: Vec<EpochStats>,
}

/// Mean loss of `params` over `samples`.
pub fn mean_loss(samples: &[TrainingSample], params: &ModelParams) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Data("no samples to evaluate".into()));
    }
    let mut total = 0.0;
    for s in samples {
        total += loss(s.label, forward(s, params)?.y_hat);
    }
    Ok(total / samples.len() as f64)
}

struct AdamState {
    m: ModelParams,
    v: ModelParams,
    t: i32,
}

fn apply_update(params: &mut ModelParams, grads: &ModelParams, cfg: &TrainConfig, adam: &mut Option<AdamState>) {
    match (cfg.optimizer, adam) {
        (Optimizer::Sgd, _) => params.add_scaled(-cfg.learning_rate, grads),
        (Optimizer::Adam { beta1, beta2, eps }, Some(state)) => {
            state.t += 1;
            let c1 = 1.0 - beta1.powi(state.t);
            let c2 = 1.0 - beta2.powi(state.t);
            let blocks =
                params.blocks_mut().into_iter().zip(grads.blocks()).zip(state.m.blocks_mut()).zip(state.v.blocks_mut());
            for (((p, g), m), v) in blocks {
                for i in 0..p.len() {
                    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                    p[i] -= cfg.learning_rate * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
                }
            }
        }
        (Optimizer::Adam { .. }, None) => unreachable!("adam state is created up front"),
    }
}

/// Trains from `init` on `samples`, tracking loss on `validation` after every
/// epoch. Batches average their gradients.
pub fn train(
    samples: &[TrainingSample],
    validation: &[TrainingSample],
    init: ModelParams,
    cfg: &TrainConfig,
) -> Result<TrainRun> {
    if samples.is_empty() {
        return Err(Error::Data("no training samples".into()));
    }
    if cfg.epochs == 0 || cfg.batch_size == 0 {
        return Err(Error::Config("epochs and batch_size must be positive".into()));
    }
    if !(cfg.learning_rate.is_finite() && cfg.learning_rate >= 0.0) {
        return Err(Error::Config(format!("bad learning rate {}", cfg.learning_rate)));
    }
    init.validate()?;
    let positives = samples.iter().filter(|s| s.label).count();
    if positives == 0 || positives == samples.len() {
        log::warn!("training set holds a single label ({positives} of {} positive)", samples.len());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = init;
    let mut grads = params.clone();
    let mut adam = match cfg.optimizer {
        Optimizer::Adam { .. } => {
            let mut zero = params.clone();
            zero.fill(0.0);
            Some(AdamState { m: zero.clone(), v: zero, t: 0 })
        }
        Optimizer::Sgd => None,
    };
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, ModelParams)> = None;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            grads.fill(0.0);
            for &i in batch {
                accumulate_gradients(&samples[i], &params, &mut grads)?;
            }
            let inv = 1.0 / batch.len() as f64;
            for b in grads.blocks_mut() {
                b.iter_mut().for_each(|g| *g *= inv);
            }
            apply_update(&mut params, &grads, cfg, &mut adam);
        }
        if !params.is_finite() {
            return Err(Error::Data(format!("parameters diverged in epoch {epoch}")));
        }
        let train_loss = mean_loss(samples, &params)?;
        let valid_loss = if validation.is_empty() { None } else { Some(mean_loss(validation, &params)?) };
        match valid_loss {
            Some(v) => log::info!("epoch {epoch}: train loss {train_loss:.5}, valid loss {v:.5}"),
            None => log::info!("epoch {epoch}: train loss {train_loss:.5}"),
        }
        let key = valid_loss.unwrap_or(train_loss);
        if best.as_ref().is_none_or(|(b, _, _)| key < *b) {
            best = Some((key, epoch, params.clone()));
        }
        history.push(EpochStats { epoch, train_loss, valid_loss });
    }
    let (_, best_epoch, params) = best.expect("at least one epoch ran");
    Ok(TrainRun { params, best_epoch, history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AttributeVector, ModelShape};
    use crate::relations::Group;
    use crate::{ItemId, UserId};
    use std::sync::Arc;

    /// Users and items live in 2-d; label = 1 when their attribute codes
    /// agree, a dot-product rule the towers can represent.
    fn separable(n: usize, seed: u64) -> Vec<TrainingSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let ucls = rng.random_range(0..2usize);
                let icls = rng.random_range(0..2usize);
                let onehot = |c: usize| vec![(c == 0) as u8 as f64, (c == 1) as u8 as f64];
                let jitter = |rng: &mut ChaCha8Rng| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
                let ug = Group::new((UserId(format!("u{i}")), jitter(&mut rng)), vec![], 2).unwrap();
                let ig = Group::new((ItemId(format!("i{i}")), jitter(&mut rng)), vec![], 2).unwrap();
                TrainingSample {
                    user_group: Arc::new(ug),
                    item_group: Arc::new(ig),
                    user_attrs: Arc::new(AttributeVector::new(onehot(ucls)).unwrap()),
                    item_attrs: Arc::new(AttributeVector::new(onehot(icls)).unwrap()),
                    label: ucls == icls,
                }
            })
            .collect()
    }

    fn shape() -> ModelShape {
        ModelShape { emb_dim: 2, user_attr_dim: 2, item_attr_dim: 2, hidden: vec![8], latent_dim: 4 }
    }

    #[test]
    fn separable_data_is_learned() {
        let data = separable(500, 1);
        let cfg = TrainConfig { epochs: 30, batch_size: 32, learning_rate: 0.01, ..Default::default() };
        let run = train(&data, &[], ModelParams::init(&shape(), 2).unwrap(), &cfg).unwrap();
        let best = run.history[run.best_epoch - 1].train_loss;
        assert!(best < 0.2 * std::f64::consts::LN_2, "loss {best}");
    }

    #[test]
    fn sgd_also_descends() {
        let data = separable(300, 3);
        let init = ModelParams::init(&shape(), 4).unwrap();
        let before = mean_loss(&data, &init).unwrap();
        let cfg = TrainConfig { epochs: 20, batch_size: 16, learning_rate: 0.1, optimizer: Optimizer::Sgd, seed: 0 };
        let run = train(&data, &[], init, &cfg).unwrap();
        assert!(run.history.last().unwrap().train_loss < before);
    }

    #[test]
    fn zero_learning_rate_is_a_no_op() {
        let data = separable(100, 5);
        let init = ModelParams::init(&shape(), 6).unwrap();
        for optimizer in [Optimizer::Sgd, Optimizer::adam()] {
            let cfg = TrainConfig { epochs: 3, batch_size: 10, learning_rate: 0.0, optimizer, seed: 1 };
            let run = train(&data, &data[..20], init.clone(), &cfg).unwrap();
            assert_eq!(run.params, init);
            let l = run.history[0].train_loss;
            assert!(run.history.iter().all(|h| h.train_loss == l));
            assert_eq!(run.best_epoch, 1);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let data = separable(200, 7);
        let cfg = TrainConfig { epochs: 3, batch_size: 16, learning_rate: 0.01, ..Default::default() };
        let a = train(&data, &data[..50], ModelParams::init(&shape(), 8).unwrap(), &cfg).unwrap();
        let b = train(&data, &data[..50], ModelParams::init(&shape(), 8).unwrap(), &cfg).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.history, b.history);
    }

    #[test]
    fn best_validation_epoch_is_returned() {
        let data = separable(200, 9);
        let cfg = TrainConfig { epochs: 6, batch_size: 16, learning_rate: 0.02, ..Default::default() };
        let run = train(&data, &data[..40], ModelParams::init(&shape(), 1).unwrap(), &cfg).unwrap();
        let best = run.history[run.best_epoch - 1].valid_loss.unwrap();
        assert!(run.history.iter().all(|h| h.valid_loss.unwrap() >= best));
        assert!((mean_loss(&data[..40], &run.params).unwrap() - best).abs() < 1e-12);
    }

    #[test]
    fn single_label_data_still_trains() {
        let mut data = separable(50, 2);
        data.iter_mut().for_each(|s| s.label = true);
        let cfg = TrainConfig { epochs: 2, ..Default::default() };
        assert!(train(&data, &[], ModelParams::init(&shape(), 1).unwrap(), &cfg).is_ok());
    }

    #[test]
    fn bad_configs_are_rejected() {
        let data = separable(10, 2);
        let init = ModelParams::init(&shape(), 1).unwrap();
        let cfg = TrainConfig { batch_size: 0, ..Default::default() };
        assert!(matches!(train(&data, &[], init.clone(), &cfg), Err(Error::Config(_))));
        assert!(matches!(train(&[], &[], init, &TrainConfig::default()), Err(Error::Data(_))));
    }
}
