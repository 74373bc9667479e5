//! Metrics and reports: confusion matrices, per-class precision/recall,
//! lifts over the uniform baseline, the neutral-prediction bias measure,
//! and the experiment ladder.
//!
//! Predictions are the argmax of each head's logits; ties go to the lowest
//! class index.

pub mod emit;
pub mod ladder;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::network::{argmax, softmax, Logits};
use crate::models::neutral::{l1_distance, NeutralCorrector};
use crate::taxonomy::{map_label, Alignment, LabelSpace, Profile, PROFILE_COUNT};

pub use emit::{comparison_table, emit_report};
pub use ladder::{ExperimentSpec, InputFeatures, ModelKind, Subset};

/// Version of the `metrics.json` layout.
pub const METRICS_VERSION: u32 = 1;

pub fn random_baseline(space: LabelSpace) -> f64 {
    1.0 / space.cardinality() as f64
}

/// Rows are true labels, columns predictions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(labels: Vec<String>) -> Self {
        let k = labels.len();
        ConfusionMatrix { labels, counts: vec![vec![0; k]; k] }
    }

    pub fn for_space(space: LabelSpace) -> Self {
        Self::new(space.label_names())
    }

    pub fn k(&self) -> usize {
        self.labels.len()
    }

    pub fn add(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k()).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        let n = self.total();
        if n == 0 {
            0.0
        } else {
            self.trace() as f64 / n as f64
        }
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn column_sums(&self) -> Vec<u64> {
        (0..self.k()).map(|j| self.counts.iter().map(|r| r[j]).sum()).collect()
    }

    /// Fraction of all predictions falling in `columns`.
    pub fn column_mass(&self, columns: &[usize]) -> f64 {
        let sums = self.column_sums();
        columns.iter().map(|&j| sums[j]).sum::<u64>() as f64 / self.total().max(1) as f64
    }

    /// Fraction of all true labels falling in `rows`.
    pub fn row_mass(&self, rows: &[usize]) -> f64 {
        let sums = self.row_sums();
        rows.iter().map(|&i| sums[i]).sum::<u64>() as f64 / self.total().max(1) as f64
    }

    pub fn predicted_frequencies(&self) -> Vec<f64> {
        let n = self.total().max(1) as f64;
        self.column_sums().into_iter().map(|c| c as f64 / n).collect()
    }

    pub fn class_metrics(&self) -> Vec<ClassMetrics> {
        let rows = self.row_sums();
        let cols = self.column_sums();
        (0..self.k())
            .map(|i| {
                let tp = self.counts[i][i] as f64;
                ClassMetrics {
                    label: self.labels[i].clone(),
                    support: rows[i],
                    predicted: cols[i],
                    precision: if cols[i] == 0 { 0.0 } else { tp / cols[i] as f64 },
                    recall: if rows[i] == 0 { 0.0 } else { tp / rows[i] as f64 },
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub support: u64,
    pub predicted: u64,
    pub precision: f64,
    pub recall: f64,
}

/// Where a head's predictions come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadSource {
    /// A dedicated output head.
    Head,
    /// Summed probabilities of the profile head.
    Marginal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadReport {
    pub space: LabelSpace,
    pub source: HeadSource,
    pub accuracy: f64,
    pub random_baseline: f64,
    pub lift: f64,
    pub confusion: ConfusionMatrix,
    pub per_class: Vec<ClassMetrics>,
}

impl HeadReport {
    fn new(space: LabelSpace, source: HeadSource, confusion: ConfusionMatrix) -> Self {
        let accuracy = confusion.accuracy();
        let base = random_baseline(space);
        HeadReport {
            space,
            source,
            accuracy,
            random_baseline: base,
            lift: accuracy / base,
            per_class: confusion.class_metrics(),
            confusion,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionReport {
    pub eta: f64,
    /// Alignment prior estimated on validation data.
    pub prior: Vec<f64>,
    pub accuracy_before: f64,
    pub accuracy_after: f64,
    pub frequencies_before: Vec<f64>,
    pub frequencies_after: Vec<f64>,
    pub l1_before: f64,
    pub l1_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub metrics_version: u32,
    pub spec: ExperimentSpec,
    /// Head in the experiment's label space.
    pub primary: HeadReport,
    pub alignment: HeadReport,
    pub motivation: HeadReport,
    /// Alignment and motivation read off the profile head, when the primary
    /// space is a profile space.
    pub marginal_alignment: Option<HeadReport>,
    pub marginal_motivation: Option<HeadReport>,
    /// Primary accuracy over the full 36-profile baseline.
    pub lift_full_space: f64,
    /// Share of alignment predictions that are neutral alignments.
    pub neutral_column_mass: f64,
    /// Share of true alignments that are neutral.
    pub neutral_prior: f64,
    /// Share of alignment predictions that are True Neutral, the one
    /// alignment with no lean on either axis.
    pub true_neutral_mass: f64,
    pub true_neutral_prior: f64,
    pub correction: Option<CorrectionReport>,
    pub samples: usize,
    pub games: usize,
    pub config_digest: String,
}

/// Model output for one test item.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub game_id: u64,
    pub truth: Profile,
    pub logits: Logits,
}

/// Rank of True Neutral among the nine alignments.
pub const TRUE_NEUTRAL: usize = 4;

pub fn neutral_alignment_ranks() -> Vec<usize> {
    Alignment::all().filter(|a| a.is_neutral()).map(|a| a.rank()).collect()
}

fn is_profile_space(space: LabelSpace) -> bool {
    matches!(space, LabelSpace::Profile36 | LabelSpace::NonNeutralProfile16 | LabelSpace::NeutralProfile20)
}

/// Log alignment and motivation marginals of a profile-space head.
pub fn marginal_logits(space: LabelSpace, primary: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    if !is_profile_space(space) {
        return None;
    }
    let profiles = space.admitted_profiles();
    let p = softmax(primary);
    let mut align = vec![0.0; 9];
    let mut motiv = vec![0.0; 4];
    for (prob, profile) in p.iter().zip(&profiles) {
        align[profile.alignment.rank()] += prob;
        motiv[profile.motivation.rank()] += prob;
    }
    let log = |v: Vec<f64>| v.into_iter().map(|x| if x > 0.0 { x.ln() } else { f64::NEG_INFINITY }).collect();
    Some((log(align), log(motiv)))
}

pub fn evaluate(
    predictions: &[Prediction],
    model_space: LabelSpace,
    spec: &ExperimentSpec,
    alignment_source: HeadSource,
    corrector: Option<&NeutralCorrector>,
    config_digest: &str,
) -> Result<Report> {
    if predictions.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    if model_space != spec.label_space {
        return Err(Error::SpaceMismatch { model: model_space, spec: spec.label_space });
    }
    let mut primary = ConfusionMatrix::for_space(spec.label_space);
    let mut alignment = ConfusionMatrix::for_space(LabelSpace::Alignment9);
    let mut uncorrected = ConfusionMatrix::for_space(LabelSpace::Alignment9);
    let mut motivation = ConfusionMatrix::for_space(LabelSpace::Motivation4);
    let marginal = is_profile_space(spec.label_space);
    let mut m_align = ConfusionMatrix::for_space(LabelSpace::Alignment9);
    let mut m_motiv = ConfusionMatrix::for_space(LabelSpace::Motivation4);
    let mut games = BTreeSet::new();
    for p in predictions {
        if !spec.subset.admits(p.truth) {
            return Err(Error::SubsetMismatch { profile: p.truth.code(), space: spec.label_space });
        }
        games.insert(p.game_id);
        let a_true = p.truth.alignment.rank();
        let m_true = p.truth.motivation.rank();
        primary.add(map_label(p.truth, spec.label_space)?, argmax(&p.logits.profile));
        uncorrected.add(a_true, argmax(&p.logits.alignment));
        let a_pred = match corrector {
            Some(c) => argmax(&c.apply(&p.logits.alignment)?),
            None => argmax(&p.logits.alignment),
        };
        alignment.add(a_true, a_pred);
        motivation.add(m_true, argmax(&p.logits.motivation));
        if let Some((a, m)) = marginal_logits(spec.label_space, &p.logits.profile) {
            m_align.add(a_true, argmax(&a));
            m_motiv.add(m_true, argmax(&m));
        }
    }
    let neutral = neutral_alignment_ranks();
    let correction = corrector.map(|c| {
        let before = uncorrected.predicted_frequencies();
        let after = alignment.predicted_frequencies();
        CorrectionReport {
            eta: c.eta,
            prior: c.prior.clone(),
            accuracy_before: uncorrected.accuracy(),
            accuracy_after: alignment.accuracy(),
            l1_before: l1_distance(&before, &c.prior),
            l1_after: l1_distance(&after, &c.prior),
            frequencies_before: before,
            frequencies_after: after,
        }
    });
    let primary = HeadReport::new(spec.label_space, HeadSource::Head, primary);
    Ok(Report {
        metrics_version: METRICS_VERSION,
        spec: spec.clone(),
        lift_full_space: primary.accuracy * PROFILE_COUNT as f64,
        neutral_column_mass: alignment.column_mass(&neutral),
        neutral_prior: alignment.row_mass(&neutral),
        true_neutral_mass: alignment.column_mass(&[TRUE_NEUTRAL]),
        true_neutral_prior: alignment.row_mass(&[TRUE_NEUTRAL]),
        primary,
        alignment: HeadReport::new(LabelSpace::Alignment9, alignment_source, alignment),
        motivation: HeadReport::new(LabelSpace::Motivation4, alignment_source, motivation),
        marginal_alignment: marginal.then(|| HeadReport::new(LabelSpace::Alignment9, HeadSource::Marginal, m_align)),
        marginal_motivation: marginal.then(|| HeadReport::new(LabelSpace::Motivation4, HeadSource::Marginal, m_motiv)),
        correction,
        samples: predictions.len(),
        games: games.len(),
        config_digest: config_digest.to_string(),
    })
}
