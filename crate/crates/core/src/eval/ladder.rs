//! Experiment ladder: each rung trains one model on a (subset, label space,
//! features) combination and evaluates it on the held-out games.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{aggregate_windows, featurize_windows, SplitPart, Splits};
use crate::error::{Error, Result};
use crate::features::{FeatureLayout, SequenceSample, AGGREGATE_DIM, SCHEMA_VERSION};
use crate::simulator::{Session, SimConfig};
use crate::models::baseline::{train_baseline, BaselineConfig, LogisticRegression};
use crate::models::network::{Logits, Readout};
use crate::models::neutral::NeutralCorrector;
use crate::models::train::{train, EpochRecord, TrainConfig};
use crate::models::Checkpoint;
use crate::taxonomy::{map_label, LabelSpace, Profile};

use super::{evaluate, marginal_logits, HeadSource, Prediction, Report};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subset {
    All,
    NeutralOnly,
    NonNeutralOnly,
}

impl Subset {
    pub fn admits(self, profile: Profile) -> bool {
        match self {
            Subset::All => true,
            Subset::NeutralOnly => profile.is_neutral(),
            Subset::NonNeutralOnly => !profile.is_neutral(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Baseline,
    LstmBase,
    LstmMultipool,
    LstmAttention,
}

impl ModelKind {
    pub fn readout(self) -> Option<Readout> {
        match self {
            ModelKind::Baseline => None,
            ModelKind::LstmBase => Some(Readout::LastState),
            ModelKind::LstmMultipool => Some(Readout::MultiPool),
            ModelKind::LstmAttention => Some(Readout::Attention),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputFeatures {
    /// Per-window aggregate vectors for the baseline.
    Aggregate52,
    Dims176,
    Dims530,
}

impl InputFeatures {
    pub fn dim(self) -> usize {
        match self {
            InputFeatures::Aggregate52 => AGGREGATE_DIM,
            InputFeatures::Dims176 => FeatureLayout::Dims176.dim(),
            InputFeatures::Dims530 => FeatureLayout::Dims530.dim(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            InputFeatures::Aggregate52 => "agg-52",
            InputFeatures::Dims176 => "176",
            InputFeatures::Dims530 => "530",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExperimentSpec {
    /// Directory-safe identifier.
    pub id: String,
    /// Row name in comparison tables.
    pub label: String,
    pub subset: Subset,
    pub label_space: LabelSpace,
    pub model: ModelKind,
    pub features: InputFeatures,
    pub neutral_correction: bool,
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::ConfigInvalid(format!("experiment {}: {msg}", self.id)));
        if self.id.is_empty() || !self.id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return bad("id must be non-empty and use [A-Za-z0-9_-]".into());
        }
        let wanted = match self.label_space {
            LabelSpace::NonNeutralProfile16 => Some(Subset::NonNeutralOnly),
            LabelSpace::NeutralProfile20 => Some(Subset::NeutralOnly),
            _ => None,
        };
        if let Some(w) = wanted {
            if self.subset != w {
                return bad(format!("{:?} requires subset {w:?}", self.label_space));
            }
        }
        if (self.model == ModelKind::Baseline) != (self.features == InputFeatures::Aggregate52) {
            return bad("the baseline, and only the baseline, uses aggregate features".into());
        }
        if self.neutral_correction && self.model == ModelKind::Baseline {
            return bad("neutral correction needs an alignment head".into());
        }
        Ok(())
    }

    /// Rungs that differ only in evaluation options share a trained model.
    pub fn training_key(&self) -> (Subset, LabelSpace, ModelKind, InputFeatures, u64) {
        (self.subset, self.label_space, self.model, self.features, self.seed)
    }
}

/// The default ladder, in reporting order.
pub fn default_ladder(seed: u64) -> Vec<ExperimentSpec> {
    let rung = |id: &str, label: &str, subset, space, model, features, corr| ExperimentSpec {
        id: id.into(),
        label: label.into(),
        subset,
        label_space: space,
        model,
        features,
        neutral_correction: corr,
        seed,
    };
    use InputFeatures::*;
    use LabelSpace::*;
    use ModelKind::*;
    vec![
        rung("baseline", "Aggregated baseline (logistic)", Subset::All, Profile36, Baseline, Aggregate52, false),
        rung("lstm_base_530", "LSTM Base", Subset::All, Profile36, LstmBase, Dims530, false),
        rung("multipool_176", "LSTM Multi-Pooling", Subset::All, Profile36, LstmMultipool, Dims176, false),
        rung("multipool_nonneutral", "Multi-Pooling, non-neutral profiles", Subset::NonNeutralOnly, NonNeutralProfile16, LstmMultipool, Dims176, false),
        rung("multipool_neutral", "Multi-Pooling, neutral profiles", Subset::NeutralOnly, NeutralProfile20, LstmMultipool, Dims176, false),
        rung("attention_lawful2", "Attention, lawful vs not", Subset::All, BinaryLawful2, LstmAttention, Dims176, false),
        rung("attention_lawaxis3", "Attention, law axis", Subset::All, LawAxis3, LstmAttention, Dims176, false),
        rung("multipool_corrected", "Multi-Pooling + neutral correction", Subset::All, Profile36, LstmMultipool, Dims176, true),
    ]
}

#[derive(Debug, Clone)]
pub struct Split3<T> {
    pub train: Vec<T>,
    pub val: Vec<T>,
    pub test: Vec<T>,
}

impl<T> Default for Split3<T> {
    fn default() -> Self {
        Split3 { train: Vec::new(), val: Vec::new(), test: Vec::new() }
    }
}

impl<T: Clone> Split3<T> {
    fn filtered(&self, keep: impl Fn(&T) -> bool) -> Split3<T> {
        let f = |v: &Vec<T>| v.iter().filter(|x| keep(x)).cloned().collect();
        Split3 { train: f(&self.train), val: f(&self.val), test: f(&self.test) }
    }
}

pub use crate::dataset::AggregateRow;

/// Featurized, balanced and split corpus.
#[derive(Debug, Clone, Default)]
pub struct LadderData {
    pub schema_version: u32,
    pub dims176: Split3<SequenceSample>,
    pub dims530: Split3<SequenceSample>,
    pub aggregate: Split3<AggregateRow>,
}

impl LadderData {
    /// Featurizes the games of each split: both sequence layouts and the
    /// per-window aggregates.
    pub fn build(sessions: &[Session], splits: &Splits, window: usize, stride: usize, sim: &SimConfig) -> Result<Self> {
        let assignment = splits.assignment();
        let kept: Vec<Session> = sessions.iter().filter(|s| assignment.contains_key(&s.game_id)).cloned().collect();
        Ok(Self::from_featurized(
            SCHEMA_VERSION,
            featurize_windows(&kept, window, stride, FeatureLayout::Dims176, sim)?,
            featurize_windows(&kept, window, stride, FeatureLayout::Dims530, sim)?,
            aggregate_windows(&kept, window, stride, sim)?,
            &assignment,
        ))
    }

    /// Distributes already featurized windows over the splits by game.
    /// Windows of games outside the split (balanced away) are dropped.
    pub fn from_featurized(
        schema_version: u32,
        dims176: Vec<SequenceSample>,
        dims530: Vec<SequenceSample>,
        aggregate: Vec<AggregateRow>,
        assignment: &BTreeMap<u64, SplitPart>,
    ) -> Self {
        fn distribute<T>(items: Vec<T>, assignment: &BTreeMap<u64, SplitPart>, id: impl Fn(&T) -> u64) -> Split3<T> {
            let mut out = Split3::default();
            for item in items {
                match assignment.get(&id(&item)) {
                    Some(SplitPart::Train) => out.train.push(item),
                    Some(SplitPart::Val) => out.val.push(item),
                    Some(SplitPart::Test) => out.test.push(item),
                    None => {}
                }
            }
            out
        }
        LadderData {
            schema_version,
            dims176: distribute(dims176, assignment, |s| s.game_id),
            dims530: distribute(dims530, assignment, |s| s.game_id),
            aggregate: distribute(aggregate, assignment, |r| r.game_id),
        }
    }

    fn sequences(&self, spec: &ExperimentSpec) -> Split3<SequenceSample> {
        let source = match spec.features {
            InputFeatures::Dims530 => &self.dims530,
            _ => &self.dims176,
        };
        source.filtered(|s| spec.subset.admits(s.profile))
    }

    fn aggregates(&self, spec: &ExperimentSpec) -> Split3<AggregateRow> {
        self.aggregate.filtered(|r| spec.subset.admits(r.profile))
    }
}

#[derive(Debug, Clone)]
pub enum TrainedModel {
    Lstm { checkpoint: Checkpoint, history: Vec<EpochRecord>, best_epoch: usize },
    Baseline(LogisticRegression),
}

#[derive(Debug, Clone)]
pub struct TrainedRow {
    pub model: TrainedModel,
    pub corrector: Option<NeutralCorrector>,
    pub config_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct LadderConfig {
    pub train: TrainConfig,
    pub baseline: BaselineConfig,
}

pub fn train_model(spec: &ExperimentSpec, data: &LadderData, cfg: &LadderConfig) -> Result<(TrainedModel, String)> {
    spec.validate()?;
    match spec.model.readout() {
        None => {
            let agg = data.aggregates(spec);
            let x: Vec<Vec<f64>> = agg.train.iter().map(|r| r.values.clone()).collect();
            let y = agg.train.iter().map(|r| map_label(r.profile, spec.label_space)).collect::<Result<Vec<_>>>()?;
            let bcfg = BaselineConfig { seed: spec.seed, ..cfg.baseline.clone() };
            let digest = {
                use sha2::{Digest, Sha256};
                format!("{:x}", Sha256::digest(serde_json::to_string(&bcfg)?.as_bytes()))
            };
            let model = train_baseline(&x, &y, spec.label_space.cardinality(), &bcfg)?;
            Ok((TrainedModel::Baseline(model), digest))
        }
        Some(readout) => {
            let seqs = data.sequences(spec);
            let tcfg = TrainConfig { seed: spec.seed, ..cfg.train.clone() };
            let net_spec = tcfg.network_spec(spec.features.dim(), readout, spec.label_space);
            let out = train(&seqs.train, &seqs.val, net_spec, data.schema_version, &tcfg)?;
            let digest = tcfg.digest();
            Ok((TrainedModel::Lstm { checkpoint: out.checkpoint, history: out.history, best_epoch: out.best_epoch }, digest))
        }
    }
}

/// Fits the alignment prior correction on validation predictions.
pub fn fit_corrector(spec: &ExperimentSpec, model: &TrainedModel, data: &LadderData) -> Result<NeutralCorrector> {
    let val = predict(spec, model, data, Part::Val)?;
    let logits: Vec<Vec<f64>> = val.iter().map(|p| p.logits.alignment.clone()).collect();
    let labels: Vec<usize> = val.iter().map(|p| p.truth.alignment.rank()).collect();
    NeutralCorrector::calibrate(&logits, &labels, 9)
}

pub fn train_row(spec: &ExperimentSpec, data: &LadderData, cfg: &LadderConfig) -> Result<TrainedRow> {
    let (model, config_digest) = train_model(spec, data, cfg)?;
    let corrector = if spec.neutral_correction { Some(fit_corrector(spec, &model, data)?) } else { None };
    Ok(TrainedRow { model, corrector, config_digest })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Val,
    Test,
}

fn baseline_logits(model: &LogisticRegression, space: LabelSpace, x: &[f64]) -> Logits {
    let profile = model.logits(x);
    let (alignment, motivation) = marginal_logits(space, &profile).unwrap_or_else(|| (vec![0.0; 9], vec![0.0; 4]));
    Logits { profile, alignment, motivation }
}

pub fn predict(spec: &ExperimentSpec, model: &TrainedModel, data: &LadderData, part: Part) -> Result<Vec<Prediction>> {
    use rayon::prelude::*;
    match model {
        TrainedModel::Baseline(m) => {
            let agg = data.aggregates(spec);
            let rows = if part == Part::Val { &agg.val } else { &agg.test };
            Ok(rows
                .iter()
                .map(|r| Prediction { game_id: r.game_id, truth: r.profile, logits: baseline_logits(m, spec.label_space, &r.values) })
                .collect())
        }
        TrainedModel::Lstm { checkpoint, .. } => {
            let seqs = data.sequences(spec);
            let rows = if part == Part::Val { &seqs.val } else { &seqs.test };
            rows.par_iter()
                .map(|s| {
                    Ok(Prediction {
                        game_id: s.game_id,
                        truth: s.profile,
                        logits: checkpoint.forward(s, data.schema_version)?,
                    })
                })
                .collect()
        }
    }
}

pub fn model_space(model: &TrainedModel, spec: &ExperimentSpec) -> LabelSpace {
    match model {
        TrainedModel::Lstm { checkpoint, .. } => checkpoint.space(),
        TrainedModel::Baseline(_) => spec.label_space,
    }
}

pub fn evaluate_row(spec: &ExperimentSpec, row: &TrainedRow, data: &LadderData) -> Result<Report> {
    let preds = predict(spec, &row.model, data, Part::Test)?;
    let source = match row.model {
        TrainedModel::Baseline(_) => HeadSource::Marginal,
        TrainedModel::Lstm { .. } => HeadSource::Head,
    };
    evaluate(&preds, model_space(&row.model, spec), spec, source, row.corrector.as_ref(), &row.config_digest)
}

/// One ladder outcome; failures are kept so the table can mark them.
#[derive(Debug, Clone)]
pub struct LadderRow {
    pub spec: ExperimentSpec,
    pub result: std::result::Result<Report, String>,
}

/// Trains and evaluates every rung in order. Rungs sharing a training key
/// reuse the earlier model; a failing rung is recorded and the rest still
/// run.
pub fn run_ladder(data: &LadderData, specs: &[ExperimentSpec], cfg: &LadderConfig) -> Vec<LadderRow> {
    let mut trained: Vec<(ExperimentSpec, TrainedModel, String)> = Vec::new();
    let mut rows = Vec::new();
    for spec in specs {
        log::info!("ladder rung {}", spec.id);
        let result = (|| -> Result<Report> {
            let existing = trained.iter().find(|(s, _, _)| s.training_key() == spec.training_key());
            let (model, digest) = match existing {
                Some((_, m, d)) => (m.clone(), d.clone()),
                None => {
                    let (m, d) = train_model(spec, data, cfg)?;
                    trained.push((spec.clone(), m.clone(), d.clone()));
                    (m, d)
                }
            };
            let corrector = if spec.neutral_correction { Some(fit_corrector(spec, &model, data)?) } else { None };
            evaluate_row(spec, &TrainedRow { model, corrector, config_digest: digest }, data)
        })();
        if let Err(e) = &result {
            log::error!("rung {} failed: {e}", spec.id);
        }
        rows.push(LadderRow { spec: spec.clone(), result: result.map_err(|e| e.to_string()) });
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_ladder_is_valid() {
        let ladder = default_ladder(3);
        assert_eq!(ladder.len(), 8);
        for s in &ladder {
            s.validate().unwrap();
        }
        assert_eq!(ladder[2].training_key(), ladder[7].training_key());
    }

    #[test]
    fn inconsistent_specs_rejected() {
        let mut s = default_ladder(0)[3].clone();
        s.subset = Subset::All;
        assert!(s.validate().is_err());
        let mut s = default_ladder(0)[0].clone();
        s.features = InputFeatures::Dims176;
        assert!(s.validate().is_err());
        let mut s = default_ladder(0)[0].clone();
        s.neutral_correction = true;
        assert!(s.validate().is_err());
    }

    #[test]
    fn failing_rung_does_not_stop_ladder() {
        let rows = run_ladder(&LadderData::default(), &default_ladder(0)[..2], &LadderConfig::default());
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.result.is_err()));
    }
}
