//! Minibatch training: BPTT gradients, global-norm clipping, Adam, and
//! early stopping on validation accuracy.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::SequenceSample;
use crate::seed;

use super::checkpoint::{AdamState, Checkpoint};
use super::network::{argmax, loss, Network, NetworkSpec, Readout, Targets};

/// Samples per gradient accumulation chunk. Chunks are summed in order, so
/// the reduction does not depend on the thread count.
const CHUNK: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub lambda_align: f64,
    pub lambda_motiv: f64,
    pub clip_norm: f64,
    pub dropout: f64,
    pub patience: usize,
    pub hidden: usize,
    pub attention: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Fixed-order gradient reduction. When false, per-sample gradients are
    /// reduced in whatever order the thread pool finishes them, which
    /// perturbs results at the 1e-6 level between runs.
    pub deterministic: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 64,
            epochs: 20,
            seed: 0,
            lambda_align: 0.5,
            lambda_motiv: 0.5,
            clip_norm: 5.0,
            dropout: 0.2,
            patience: 3,
            hidden: 64,
            attention: 32,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            deterministic: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::ConfigInvalid(what.to_string()));
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return bad("batch_size and epochs must be positive");
        }
        if !(self.clip_norm > 0.0) {
            return bad("clip_norm must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if self.lambda_align < 0.0 || self.lambda_motiv < 0.0 {
            return bad("loss weights must be non-negative");
        }
        if self.hidden == 0 || self.attention == 0 {
            return bad("hidden and attention sizes must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.epsilon > 0.0) {
            return bad("Adam coefficients out of range");
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        format!("{:x}", Sha256::digest(json.as_bytes()))
    }

    pub fn network_spec(&self, input_dim: usize, readout: Readout, space: crate::taxonomy::LabelSpace) -> NetworkSpec {
        NetworkSpec { input_dim, hidden: self.hidden, attention: self.attention, readout, space }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub history: Vec<EpochRecord>,
    /// 1-based epoch of the returned weights.
    pub best_epoch: usize,
}

fn targets_for(samples: &[&SequenceSample], net: &Network) -> Result<Vec<Targets>> {
    samples.iter().map(|s| Targets::for_profile(s.profile, net.spec.space)).collect()
}

fn dropout_mask(cfg: &TrainConfig, step: u64, position: usize, len: usize) -> Option<Vec<f64>> {
    if cfg.dropout == 0.0 {
        return None;
    }
    let mut rng = seed::rng(&[seed::stream::DROPOUT, cfg.seed, step, position as u64]);
    let keep = 1.0 / (1.0 - cfg.dropout);
    Some((0..len).map(|_| if rng.gen::<f64>() < cfg.dropout { 0.0 } else { keep }).collect())
}

struct BatchGrad {
    loss: f64,
    correct: usize,
    grad: Vec<f64>,
}

impl BatchGrad {
    fn zeros(n: usize) -> Self {
        BatchGrad { loss: 0.0, correct: 0, grad: vec![0.0; n] }
    }

    fn add(mut self, other: BatchGrad) -> Self {
        self.loss += other.loss;
        self.correct += other.correct;
        self.grad.iter_mut().zip(&other.grad).for_each(|(a, b)| *a += b);
        self
    }
}

fn batch_gradient(net: &Network, batch: &[&SequenceSample], cfg: &TrainConfig, step: u64) -> Result<BatchGrad> {
    let targets = targets_for(batch, net)?;
    let n = net.param_count();
    let scale = 1.0 / batch.len() as f64;
    let lambdas = (cfg.lambda_align, cfg.lambda_motiv);
    let pooled = net.spec.pooled_dim();
    let one = |pos: usize, acc: &mut BatchGrad| -> Result<()> {
        let s = batch[pos];
        let mask = dropout_mask(cfg, step, pos, pooled);
        let (l, logits) = net.loss_and_grad(&s.data, s.rows, &targets[pos], lambdas, mask.as_deref(), scale, &mut acc.grad)?;
        acc.loss += l * scale;
        acc.correct += usize::from(argmax(&logits.profile) == targets[pos].primary);
        Ok(())
    };
    if cfg.deterministic {
        let starts: Vec<usize> = (0..batch.len()).step_by(CHUNK).collect();
        let parts = starts
            .par_iter()
            .map(|&start| {
                let mut acc = BatchGrad::zeros(n);
                for pos in start..(start + CHUNK).min(batch.len()) {
                    one(pos, &mut acc)?;
                }
                Ok(acc)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(parts.into_iter().fold(BatchGrad::zeros(n), BatchGrad::add))
    } else {
        (0..batch.len())
            .into_par_iter()
            .try_fold(
                || BatchGrad::zeros(n),
                |mut acc, pos| {
                    one(pos, &mut acc)?;
                    Ok(acc)
                },
            )
            .try_reduce(|| BatchGrad::zeros(n), |a, b| Ok(a.add(b)))
    }
}

/// Scales `grad` in place to global norm at most `clip`; returns the norm
/// before clipping.
pub fn clip_global_norm(grad: &mut [f64], clip: f64) -> f64 {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > clip {
        let s = clip / norm;
        grad.iter_mut().for_each(|g| *g *= s);
    }
    norm
}

pub fn adam_update(params: &mut [f64], grad: &[f64], state: &mut AdamState, cfg: &TrainConfig) {
    state.t += 1;
    let (b1, b2) = (cfg.beta1, cfg.beta2);
    let c1 = 1.0 - b1.powi(state.t as i32);
    let c2 = 1.0 - b2.powi(state.t as i32);
    for i in 0..params.len() {
        let g = grad[i];
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}

/// One optimizer step on `batch`. Returns the mean batch loss measured
/// before the update.
pub fn train_step(ckpt: &mut Checkpoint, batch: &[&SequenceSample], cfg: &TrainConfig) -> Result<f64> {
    Ok(step_inner(ckpt, batch, cfg)?.0)
}

fn step_inner(ckpt: &mut Checkpoint, batch: &[&SequenceSample], cfg: &TrainConfig) -> Result<(f64, usize)> {
    if batch.is_empty() {
        return Err(Error::EmptySplit("batch"));
    }
    let step = ckpt.adam.t;
    let mut g = batch_gradient(&ckpt.network, batch, cfg, step)?;
    if !g.loss.is_finite() || g.grad.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteLoss { step });
    }
    clip_global_norm(&mut g.grad, cfg.clip_norm);
    adam_update(&mut ckpt.network.params, &g.grad, &mut ckpt.adam, cfg);
    Ok((g.loss, g.correct))
}

/// Mean loss and primary-head accuracy without dropout.
pub fn loss_and_accuracy(net: &Network, samples: &[SequenceSample], cfg: &TrainConfig) -> Result<(f64, f64)> {
    let per: Vec<(f64, bool)> = samples
        .par_iter()
        .map(|s| {
            let t = Targets::for_profile(s.profile, net.spec.space)?;
            let logits = net.forward(&s.data, s.rows)?;
            Ok((loss(&logits, &t, cfg.lambda_align, cfg.lambda_motiv), argmax(&logits.profile) == t.primary))
        })
        .collect::<Result<_>>()?;
    let n = per.len().max(1) as f64;
    Ok((per.iter().map(|p| p.0).sum::<f64>() / n, per.iter().filter(|p| p.1).count() as f64 / n))
}

pub fn train(
    train_set: &[SequenceSample],
    val_set: &[SequenceSample],
    spec: NetworkSpec,
    schema_version: u32,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptySplit("train"));
    }
    if val_set.is_empty() {
        return Err(Error::EmptySplit("val"));
    }
    for s in train_set.iter().chain(val_set) {
        if s.dim != spec.input_dim {
            return Err(Error::DimensionMismatch { expected: spec.input_dim, got: s.dim });
        }
        Targets::for_profile(s.profile, spec.space)?;
    }
    let network = Network::init(spec, cfg.seed)?;
    let mut ckpt = Checkpoint::new(network, schema_version, cfg.digest());
    let mut best = (ckpt.clone(), f64::NEG_INFINITY, 0);
    let mut history = Vec::new();
    let mut stale = 0;
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    for epoch in 1..=cfg.epochs {
        order.sort_unstable();
        order.shuffle(&mut seed::rng(&[seed::stream::SHUFFLE, cfg.seed, epoch as u64]));
        let (mut loss_sum, mut correct) = (0.0, 0);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&SequenceSample> = chunk.iter().map(|&i| &train_set[i]).collect();
            let (l, c) = step_inner(&mut ckpt, &batch, cfg)?;
            loss_sum += l * batch.len() as f64;
            correct += c;
        }
        let (val_loss, val_accuracy) = loss_and_accuracy(&ckpt.network, val_set, cfg)?;
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            train_accuracy: correct as f64 / train_set.len() as f64,
            val_loss,
            val_accuracy,
        };
        log::info!(
            "epoch {epoch}: train loss {:.4} acc {:.4}, val loss {:.4} acc {:.4}",
            record.train_loss,
            record.train_accuracy,
            val_loss,
            val_accuracy
        );
        history.push(record);
        if val_accuracy > best.1 {
            best = (ckpt.clone(), val_accuracy, epoch);
            stale = 0;
        } else {
            stale += 1;
            if stale > cfg.patience {
                break;
            }
        }
    }
    Ok(TrainOutcome { checkpoint: best.0, history, best_epoch: best.2 })
}
