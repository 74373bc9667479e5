//! Aggregated-feature baseline: multinomial logistic regression on
//! standardized per-window summary vectors.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

use super::network::{argmax, softmax};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2: f64,
    pub seed: u64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self { learning_rate: 0.1, epochs: 60, batch_size: 64, l2: 1e-4, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    pub classes: usize,
    pub mean: Vec<f64>,
    /// Per-column scale; constant columns get 0 and are ignored.
    pub inv_std: Vec<f64>,
    /// `classes × dim`, class-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LogisticRegression {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.mean).zip(&self.inv_std).map(|((v, m), s)| (v - m) * s).collect()
    }

    fn logits_std(&self, z: &[f64]) -> Vec<f64> {
        let d = self.dim();
        (0..self.classes)
            .map(|k| self.bias[k] + self.weights[k * d..(k + 1) * d].iter().zip(z).map(|(w, x)| w * x).sum::<f64>())
            .collect()
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.logits_std(&self.standardize(x))
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.logits(x))
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        argmax(&self.logits(x))
    }
}

pub fn train_baseline(x: &[Vec<f64>], labels: &[usize], classes: usize, cfg: &BaselineConfig) -> Result<LogisticRegression> {
    if x.is_empty() || x.len() != labels.len() {
        return Err(Error::ConfigInvalid("baseline needs one label per vector".into()));
    }
    if !(cfg.learning_rate > 0.0) || cfg.epochs == 0 || cfg.batch_size == 0 || cfg.l2 < 0.0 {
        return Err(Error::ConfigInvalid("baseline learning rate, epochs and batch size must be positive".into()));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::IndexOutOfRange { index: bad, len: classes });
    }
    let mut present = labels.to_vec();
    present.sort_unstable();
    present.dedup();
    if present.len() < 2 {
        return Err(Error::DegenerateData("fewer than two classes present".into()));
    }
    let d = x[0].len();
    if let Some(v) = x.iter().find(|v| v.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: v.len() });
    }
    let n = x.len() as f64;
    let mean: Vec<f64> = (0..d).map(|j| x.iter().map(|v| v[j]).sum::<f64>() / n).collect();
    let mut inv_std = vec![0.0; d];
    for j in 0..d {
        let var = x.iter().map(|v| (v[j] - mean[j]).powi(2)).sum::<f64>() / n;
        if var > 1e-24 {
            inv_std[j] = 1.0 / var.sqrt();
        } else if cfg.l2 == 0.0 {
            return Err(Error::DegenerateData(format!("feature column {j} is constant")));
        } else {
            log::warn!("baseline: feature column {j} is constant and is ignored");
        }
    }
    let mut model = LogisticRegression { classes, mean, inv_std, weights: vec![0.0; classes * d], bias: vec![0.0; classes] };
    let z: Vec<Vec<f64>> = x.iter().map(|v| model.standardize(v)).collect();
    let mut order: Vec<usize> = (0..x.len()).collect();
    for epoch in 0..cfg.epochs {
        order.sort_unstable();
        order.shuffle(&mut seed::rng(&[seed::stream::BASELINE, cfg.seed, epoch as u64]));
        for chunk in order.chunks(cfg.batch_size) {
            let mut gw = vec![0.0; classes * d];
            let mut gb = vec![0.0; classes];
            for &i in chunk {
                let mut p = softmax(&model.logits_std(&z[i]));
                p[labels[i]] -= 1.0;
                for k in 0..classes {
                    gb[k] += p[k];
                    gw[k * d..(k + 1) * d].iter_mut().zip(&z[i]).for_each(|(g, v)| *g += p[k] * v);
                }
            }
            let scale = cfg.learning_rate / chunk.len() as f64;
            for (w, g) in model.weights.iter_mut().zip(&gw) {
                *w -= scale * g + cfg.learning_rate * cfg.l2 * *w;
            }
            model.bias.iter_mut().zip(&gb).for_each(|(b, g)| *b -= scale * g);
        }
    }
    Ok(model)
}
