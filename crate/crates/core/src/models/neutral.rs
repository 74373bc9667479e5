//! Post-hoc correction of alignment logits toward a class prior.
//!
//! Each logit is shifted by `−η·ln(predicted_k / prior_k)`, so classes the
//! model predicts more often than their prior frequency are pushed down.

use crate::error::{Error, Result};

use super::network::argmax;

pub fn neutral_correction(logits: &[f64], predicted: &[f64], prior: &[f64], eta: f64) -> Result<Vec<f64>> {
    if predicted.len() != logits.len() {
        return Err(Error::DimensionMismatch { expected: logits.len(), got: predicted.len() });
    }
    if prior.len() != logits.len() {
        return Err(Error::DimensionMismatch { expected: logits.len(), got: prior.len() });
    }
    if let Some(k) = predicted.iter().chain(prior).position(|&f| !(f > 0.0)) {
        return Err(Error::ZeroFrequency(k % logits.len()));
    }
    Ok(logits
        .iter()
        .zip(predicted.iter().zip(prior))
        .map(|(l, (p, q))| l - eta * (p / q).ln())
        .collect())
}

/// Argmax frequencies over `rows`, with `floor` added to every count so no
/// class has zero frequency.
pub fn predicted_frequencies(rows: &[Vec<f64>], classes: usize, floor: f64) -> Vec<f64> {
    let mut counts = vec![floor; classes];
    for r in rows {
        counts[argmax(r)] += 1.0;
    }
    let total: f64 = counts.iter().sum();
    counts.into_iter().map(|c| c / total).collect()
}

pub fn label_frequencies(labels: &[usize], classes: usize, floor: f64) -> Vec<f64> {
    let mut counts = vec![floor; classes];
    for &l in labels {
        counts[l] += 1.0;
    }
    let total: f64 = counts.iter().sum();
    counts.into_iter().map(|c| c / total).collect()
}

pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Fitted correction: frequencies and strength chosen on validation data.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NeutralCorrector {
    pub predicted: Vec<f64>,
    pub prior: Vec<f64>,
    pub eta: f64,
}

/// Candidate strengths 0.05, 0.10, ..., 2.0. Argmax frequencies react
/// sharply to the shift, so useful values often sit well below 1.
pub fn eta_grid() -> impl Iterator<Item = f64> {
    (1..=40).map(|i| f64::from(i) * 0.05)
}

impl NeutralCorrector {
    pub fn apply(&self, logits: &[f64]) -> Result<Vec<f64>> {
        neutral_correction(logits, &self.predicted, &self.prior, self.eta)
    }

    /// Picks η from [`eta_grid`] maximizing validation accuracy; ties go to
    /// the η whose corrected prediction frequencies are closest (L1) to the
    /// prior, then to the smaller η.
    pub fn calibrate(val_logits: &[Vec<f64>], val_labels: &[usize], classes: usize) -> Result<Self> {
        if val_logits.is_empty() || val_logits.len() != val_labels.len() {
            return Err(Error::EmptySplit("val"));
        }
        let predicted = predicted_frequencies(val_logits, classes, 0.5);
        let prior = label_frequencies(val_labels, classes, 0.5);
        let mut best: Option<(f64, f64, NeutralCorrector)> = None;
        for eta in eta_grid() {
            let c = NeutralCorrector { predicted: predicted.clone(), prior: prior.clone(), eta };
            let adjusted = val_logits.iter().map(|l| c.apply(l)).collect::<Result<Vec<_>>>()?;
            let acc = adjusted.iter().zip(val_labels).filter(|(l, &y)| argmax(l) == y).count() as f64
                / val_labels.len() as f64;
            let dist = l1_distance(&predicted_frequencies(&adjusted, classes, 0.0), &prior);
            let better = match &best {
                None => true,
                Some((a, d, _)) => acc > *a || (acc == *a && dist < *d),
            };
            if better {
                best = Some((acc, dist, c));
            }
        }
        Ok(best.expect("grid is non-empty").2)
    }
}
