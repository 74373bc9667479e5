//! Pipeline stages. Each stage reads its inputs from the output directory,
//! writes its artifacts into its own subdirectory and records a
//! `stage.json` with digests of exactly what it read and wrote.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io;
use std::path::{Path, PathBuf};

use pbench_core::dataset::{
    aggregate_windows, balance, featurize_windows, read_json, split_by_game, write_json, AggregateRow, BalancedIndexFile,
    CorpusIndex, SplitPart,
};
use pbench_core::eval::emit::{comparison_table, emit_report, table_row, TABLE_HEADER};
use pbench_core::eval::ladder::{
    default_ladder, evaluate_row, fit_corrector, train_model, ExperimentSpec, LadderConfig, LadderData, LadderRow,
    TrainedModel, TrainedRow,
};
use pbench_core::eval::Report;
use pbench_core::features::{tensor_file, FeatureLayout, SequenceSample, AGGREGATE_DIM, SCHEMA_VERSION};
use pbench_core::models::{Checkpoint, CheckpointMeta, LogisticRegression, NeutralCorrector};
use pbench_core::simulator::{generate_corpus, read_sessions, write_sessions, CorpusConfig, Manifest, Session};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{Fractions, PipelineConfig, WindowConfig};
use crate::failure::{CliResult, Failure};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub version: String,
    pub seed: u64,
    pub config_digest: String,
    /// Stage-specific settings later stages check against their own config.
    pub settings: serde_json::Value,
    /// Path relative to the output directory → hex SHA-256.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitFile {
    pub seed: u64,
    pub fractions: Fractions,
    pub assignment: BTreeMap<u64, SplitPart>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ModelFile {
    Lstm,
    Baseline,
}

/// `rung.json`: which files make up a trained rung.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RungRecord {
    spec: ExperimentSpec,
    model: ModelFile,
    config_digest: String,
    /// Rung whose trained model was reused, if any.
    reused_from: Option<String>,
    corrector: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RungFailure {
    spec: ExperimentSpec,
    error: String,
}

pub struct Pipeline {
    pub cfg: PipelineConfig,
    pub out: PathBuf,
}

pub fn sha256_file(path: &Path) -> io::Result<String> {
    let mut hasher = Sha256::new();
    io::copy(&mut File::open(path)?, &mut hasher)?;
    Ok(hex::encode(hasher.finalize()))
}

fn require(path: &Path, producer: &str) -> CliResult<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Failure::dependency(format!("{} is missing; run `pbench {producer}` first", path.display())))
    }
}

fn layout_file(layout: FeatureLayout) -> String {
    format!("features{}.pbf", layout.dim())
}

const AGGREGATE_FILE: &str = "aggregate52.pbf";

impl Pipeline {
    pub fn new(cfg: PipelineConfig) -> Self {
        let out = cfg.out_dir.clone();
        Pipeline { cfg, out }
    }

    fn dir(&self, stage: &str) -> PathBuf {
        self.out.join(stage)
    }

    fn rel(&self, path: &Path) -> String {
        let r = path.strip_prefix(&self.out).unwrap_or(path);
        r.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/")
    }

    fn digests(&self, paths: &[PathBuf]) -> CliResult<BTreeMap<String, String>> {
        paths.iter().map(|p| Ok((self.rel(p), sha256_file(p)?))).collect()
    }

    fn record(&self, stage: &str, settings: serde_json::Value, inputs: &[PathBuf], outputs: &[PathBuf]) -> CliResult<()> {
        let rec = StageRecord {
            stage: stage.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: self.cfg.seed,
            config_digest: self.cfg.digest(),
            settings,
            inputs: self.digests(inputs)?,
            outputs: self.digests(outputs)?,
        };
        write_json(&self.dir(stage).join("stage.json"), &rec)?;
        Ok(())
    }

    fn upstream(&self, stage: &str) -> CliResult<StageRecord> {
        let path = self.dir(stage).join("stage.json");
        require(&path, stage)?;
        read_json(&path).map_err(|e| Failure::artifact(&path.display().to_string(), e))
    }

    fn fresh_dir(&self, stage: &str) -> CliResult<PathBuf> {
        let dir = self.dir(stage);
        if dir.exists() {
            fs::remove_dir_all(&dir)?;
        }
        fs::create_dir_all(&dir)?;
        Ok(dir)
    }

    fn sessions_path(&self) -> PathBuf {
        self.dir("gen").join("sessions.jsonl")
    }

    fn load_sessions(&self) -> CliResult<Vec<Session>> {
        let path = self.sessions_path();
        require(&path, "gen")?;
        read_sessions(&path).map_err(|e| Failure::artifact("sessions.jsonl", e))
    }

    pub fn gen(&self) -> CliResult<()> {
        let corpus = generate_corpus(&CorpusConfig {
            games_per_profile: self.cfg.games_per_profile,
            master_seed: self.cfg.seed,
            sim: self.cfg.sim.clone(),
        })?;
        let dir = self.fresh_dir("gen")?;
        let sessions = self.sessions_path();
        let manifest = dir.join("manifest.json");
        write_sessions(&sessions, &corpus.sessions)?;
        write_json(&manifest, &corpus.manifest)?;
        for (code, n) in &corpus.manifest.counts {
            println!("{code:<18} {n}");
        }
        println!("sessions: {}", corpus.manifest.total_sessions);
        let settings = serde_json::json!({ "games_per_profile": self.cfg.games_per_profile, "sim": self.cfg.sim });
        self.record("gen", settings, &[], &[sessions, manifest])
    }

    pub fn featurize(&self) -> CliResult<()> {
        let gen = self.upstream("gen")?;
        if gen.settings.get("sim") != Some(&serde_json::to_value(&self.cfg.sim).expect("sim serializes")) {
            return Err(Failure::dependency("simulator settings differ from the ones the corpus was generated with; rerun gen"));
        }
        let sessions = self.load_sessions()?;
        let manifest: Manifest = read_json(&self.dir("gen").join("manifest.json")).map_err(|e| Failure::artifact("manifest.json", e))?;
        if manifest.total_sessions != sessions.len() {
            return Err(Failure::dependency("sessions.jsonl does not match manifest.json"));
        }
        let dir = self.fresh_dir("featurize")?;
        let WindowConfig { length, stride } = self.cfg.window;
        let mut outputs = Vec::new();
        for &layout in &self.cfg.layouts {
            let samples = featurize_windows(&sessions, length, stride, layout, &self.cfg.sim)?;
            let path = dir.join(layout_file(layout));
            tensor_file::save(&path, SCHEMA_VERSION, layout.dim(), &samples)?;
            println!("{}: {} windows × {}", layout_file(layout), samples.len(), layout.dim());
            outputs.push(path);
        }
        let rows = aggregate_windows(&sessions, length, stride, &self.cfg.sim)?;
        let samples: Vec<SequenceSample> = rows
            .into_iter()
            .map(|r| SequenceSample { game_id: r.game_id, profile: r.profile, window_start: None, rows: 1, dim: AGGREGATE_DIM, data: r.values })
            .collect();
        let path = dir.join(AGGREGATE_FILE);
        tensor_file::save(&path, SCHEMA_VERSION, AGGREGATE_DIM, &samples)?;
        println!("{AGGREGATE_FILE}: {} windows × {AGGREGATE_DIM}", samples.len());
        outputs.push(path);
        let settings = serde_json::json!({ "window": self.cfg.window, "layouts": self.cfg.layouts, "schema_version": SCHEMA_VERSION });
        self.record("featurize", settings, &[self.sessions_path()], &outputs)
    }

    pub fn balance(&self) -> CliResult<()> {
        self.upstream("gen")?;
        let sessions = self.load_sessions()?;
        let WindowConfig { length, stride } = self.cfg.window;
        let index = CorpusIndex::from_sessions(&sessions, length, stride);
        let target = match self.cfg.balance_target {
            Some(t) => t,
            None => index.totals().values().copied().min().unwrap_or(0),
        };
        let balanced = balance(&index, target, self.cfg.seed)?;
        let dir = self.fresh_dir("balance")?;
        let path = dir.join("balanced_index.json");
        write_json(&path, &balanced.to_file(self.cfg.seed, target))?;
        println!("target {target} windows per profile");
        println!("imbalance ratio {:.3} → {:.3}", index.imbalance_ratio(), balanced.imbalance_ratio());
        println!("games {} → {}", index.game_count(), balanced.game_count());
        let settings = serde_json::json!({ "window": self.cfg.window, "target": target });
        self.record("balance", settings, &[self.sessions_path()], &[path])
    }

    fn split_path(&self) -> PathBuf {
        self.dir("split").join("split.json")
    }

    pub fn split(&self) -> CliResult<()> {
        self.upstream("balance")?;
        let sessions = self.load_sessions()?;
        let balanced_path = self.dir("balance").join("balanced_index.json");
        let file: BalancedIndexFile = read_json(&balanced_path).map_err(|e| Failure::artifact("balanced_index.json", e))?;
        let WindowConfig { length, stride } = self.cfg.window;
        let full = CorpusIndex::from_sessions(&sessions, length, stride);
        let index = CorpusIndex::from_file(&file, &full).map_err(|e| Failure::artifact("balanced_index.json", e))?;
        let splits = split_by_game(&index, &self.cfg.split_spec())?;
        self.fresh_dir("split")?;
        let path = self.split_path();
        let out = SplitFile { seed: self.cfg.seed, fractions: self.cfg.split.clone(), assignment: splits.assignment() };
        write_json(&path, &out)?;
        for part in [SplitPart::Train, SplitPart::Val, SplitPart::Test] {
            let p = splits.part(part);
            println!("{part:?}: {} games, {} windows", p.game_count(), p.total_windows());
        }
        self.record("split", serde_json::json!({ "fractions": self.cfg.split }), &[self.sessions_path(), balanced_path], &[path])
    }

    fn feature_inputs(&self) -> Vec<PathBuf> {
        let dir = self.dir("featurize");
        let mut v: Vec<PathBuf> = self.cfg.layouts.iter().map(|&l| dir.join(layout_file(l))).collect();
        v.push(dir.join(AGGREGATE_FILE));
        v
    }

    fn load_tensor(&self, path: &Path, dim: usize) -> CliResult<Vec<SequenceSample>> {
        require(path, "featurize")?;
        let name = self.rel(path);
        let t = tensor_file::load(path).map_err(|e| Failure::artifact(&name, e))?;
        if t.schema_version != SCHEMA_VERSION {
            return Err(Failure::dependency(format!("{name} has feature schema {}, expected {SCHEMA_VERSION}", t.schema_version)));
        }
        if t.dim != dim {
            return Err(Failure::dependency(format!("{name} has dimension {}, expected {dim}", t.dim)));
        }
        Ok(t.samples)
    }

    /// Featurized windows distributed over the split.
    fn load_data(&self) -> CliResult<LadderData> {
        let feat = self.upstream("featurize")?;
        if feat.settings.get("window") != Some(&serde_json::to_value(&self.cfg.window).expect("window serializes")) {
            return Err(Failure::dependency("window settings differ from the featurized tensors; rerun featurize"));
        }
        self.upstream("split")?;
        let split: SplitFile = read_json(&self.split_path()).map_err(|e| Failure::artifact("split.json", e))?;
        let dir = self.dir("featurize");
        let mut seqs = BTreeMap::new();
        for &layout in &self.cfg.layouts {
            seqs.insert(layout.dim(), self.load_tensor(&dir.join(layout_file(layout)), layout.dim())?);
        }
        let aggregate: Vec<AggregateRow> = self
            .load_tensor(&dir.join(AGGREGATE_FILE), AGGREGATE_DIM)?
            .into_iter()
            .map(|s| AggregateRow { game_id: s.game_id, profile: s.profile, values: s.data })
            .collect();
        let mut take = |l: FeatureLayout| seqs.remove(&l.dim()).unwrap_or_default();
        let (d176, d530) = (take(FeatureLayout::Dims176), take(FeatureLayout::Dims530));
        Ok(LadderData::from_featurized(SCHEMA_VERSION, d176, d530, aggregate, &split.assignment))
    }

    fn ladder_config(&self) -> LadderConfig {
        LadderConfig { train: self.cfg.train.clone(), baseline: self.cfg.baseline.clone() }
    }

    pub fn train(&self) -> CliResult<()> {
        let data = self.load_data()?;
        let rungs = self.cfg.rungs()?;
        let dir = self.fresh_dir("train")?;
        let lcfg = self.ladder_config();
        let mut trained: Vec<(ExperimentSpec, TrainedModel, String)> = Vec::new();
        let mut outputs = Vec::new();
        let mut failures = 0;
        for spec in &rungs {
            let rung_dir = dir.join(&spec.id);
            fs::create_dir_all(&rung_dir)?;
            log::info!("training rung {}", spec.id);
            let result = (|| -> pbench_core::Result<Vec<PathBuf>> {
                let existing = trained.iter().find(|(s, _, _)| s.training_key() == spec.training_key());
                let reused_from = existing.map(|(s, _, _)| s.id.clone());
                let (model, digest) = match existing {
                    Some((_, m, d)) => (m.clone(), d.clone()),
                    None => {
                        let (m, d) = train_model(spec, &data, &lcfg)?;
                        trained.push((spec.clone(), m.clone(), d.clone()));
                        (m, d)
                    }
                };
                let corrector = if spec.neutral_correction { Some(fit_corrector(spec, &model, &data)?) } else { None };
                write_rung(&rung_dir, spec, &model, corrector.as_ref(), &digest, reused_from)
            })();
            match result {
                Ok(files) => {
                    println!("{}: trained", spec.id);
                    outputs.extend(files);
                }
                Err(e) => {
                    failures += 1;
                    log::error!("rung {} failed: {e}", spec.id);
                    println!("{}: failed: {e}", spec.id);
                    let path = rung_dir.join("failed.json");
                    write_json(&path, &RungFailure { spec: spec.clone(), error: e.to_string() })?;
                    outputs.push(path);
                }
            }
        }
        if failures == rungs.len() {
            return Err(Failure { code: crate::failure::EXIT_OTHER, message: "every ladder rung failed".into() });
        }
        let mut inputs = vec![self.split_path()];
        inputs.extend(self.feature_inputs());
        let ids: Vec<&str> = rungs.iter().map(|s| s.id.as_str()).collect();
        self.record("train", serde_json::json!({ "rungs": ids, "train": self.cfg.train, "baseline": self.cfg.baseline }), &inputs, &outputs)
    }

    pub fn eval(&self) -> CliResult<()> {
        self.upstream("train")?;
        let rungs = self.cfg.rungs()?;
        let train_dir = self.dir("train");
        // Load every rung before evaluating any, so a missing model fails fast.
        let mut loaded = Vec::new();
        let mut inputs = Vec::new();
        for spec in &rungs {
            let rung_dir = train_dir.join(&spec.id);
            let failed = rung_dir.join("failed.json");
            if failed.exists() {
                let f: RungFailure = read_json(&failed).map_err(|e| Failure::artifact(&self.rel(&failed), e))?;
                loaded.push((spec, Err(f.error)));
                continue;
            }
            let (row, files) = self.load_rung(&rung_dir, spec)?;
            inputs.extend(files);
            loaded.push((spec, Ok(row)));
        }
        let data = self.load_data()?;
        let dir = self.fresh_dir("eval")?;
        let mut rows = Vec::new();
        let mut outputs = Vec::new();
        for (spec, row) in loaded {
            let result = row.and_then(|row| evaluate_row(spec, &row, &data).map_err(|e| e.to_string()));
            if let Ok(report) = &result {
                let rung_dir = dir.join(&spec.id);
                emit_report(report, &rung_dir)?;
                outputs.extend(files_in(&rung_dir)?);
            }
            rows.push(LadderRow { spec: spec.clone(), result });
        }
        let table = comparison_table(&rows);
        let ladder_md = dir.join("ladder.md");
        fs::write(&ladder_md, &table)?;
        outputs.push(ladder_md);
        print!("{table}");
        inputs.push(self.split_path());
        inputs.extend(self.feature_inputs());
        self.record("eval", serde_json::Value::Null, &inputs, &outputs)
    }

    fn load_rung(&self, dir: &Path, spec: &ExperimentSpec) -> CliResult<(TrainedRow, Vec<PathBuf>)> {
        let rung_path = dir.join("rung.json");
        require(&rung_path, "train")?;
        let artifact = |p: &Path, e| Failure::artifact(&self.rel(p), e);
        let rec: RungRecord = read_json(&rung_path).map_err(|e| artifact(&rung_path, e))?;
        if &rec.spec != spec {
            return Err(Failure::dependency(format!("{} was trained for a different rung configuration; rerun train", self.rel(&rung_path))));
        }
        let mut files = vec![rung_path];
        let model = match rec.model {
            ModelFile::Lstm => {
                let (ckpt_path, meta_path) = (dir.join("checkpoint.pbck"), dir.join("checkpoint.json"));
                let checkpoint = Checkpoint::load(&ckpt_path).map_err(|e| artifact(&ckpt_path, e))?;
                if checkpoint.schema_version != SCHEMA_VERSION {
                    let e = pbench_core::Error::SchemaMismatch { checkpoint: checkpoint.schema_version, features: SCHEMA_VERSION };
                    return Err(artifact(&ckpt_path, e));
                }
                let meta: CheckpointMeta = read_json(&meta_path).map_err(|e| artifact(&meta_path, e))?;
                files.extend([ckpt_path, meta_path]);
                TrainedModel::Lstm { checkpoint, history: meta.history, best_epoch: meta.best_epoch }
            }
            ModelFile::Baseline => {
                let path = dir.join("baseline.json");
                let m: LogisticRegression = read_json(&path).map_err(|e| artifact(&path, e))?;
                files.push(path);
                TrainedModel::Baseline(m)
            }
        };
        let corrector = if rec.corrector {
            let path = dir.join("corrector.json");
            let c: NeutralCorrector = read_json(&path).map_err(|e| artifact(&path, e))?;
            files.push(path);
            Some(c)
        } else {
            None
        };
        Ok((TrainedRow { model, corrector, config_digest: rec.config_digest }, files))
    }
}

fn write_rung(
    dir: &Path,
    spec: &ExperimentSpec,
    model: &TrainedModel,
    corrector: Option<&NeutralCorrector>,
    digest: &str,
    reused_from: Option<String>,
) -> pbench_core::Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    let kind = match model {
        TrainedModel::Lstm { checkpoint, history, best_epoch } => {
            let path = dir.join("checkpoint.pbck");
            checkpoint.save(&path)?;
            files.push(path);
            let path = dir.join("checkpoint.json");
            write_json(&path, &CheckpointMeta::new(checkpoint, history, *best_epoch))?;
            files.push(path);
            ModelFile::Lstm
        }
        TrainedModel::Baseline(m) => {
            let path = dir.join("baseline.json");
            write_json(&path, m)?;
            files.push(path);
            ModelFile::Baseline
        }
    };
    if let Some(c) = corrector {
        let path = dir.join("corrector.json");
        write_json(&path, c)?;
        files.push(path);
    }
    let path = dir.join("rung.json");
    let rec = RungRecord { spec: spec.clone(), model: kind, config_digest: digest.to_string(), reused_from, corrector: corrector.is_some() };
    write_json(&path, &rec)?;
    files.push(path);
    Ok(files)
}

fn files_in(dir: &Path) -> io::Result<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)?.map(|e| e.map(|e| e.path())).collect::<io::Result<_>>()?;
    v.sort();
    Ok(v)
}

/// Merges every `<dir>/*/metrics.json` into one table in ladder order and
/// writes it to `<dir>/table.md`.
pub fn report(dir: &Path) -> CliResult<String> {
    if !dir.is_dir() {
        return Err(Failure::dependency(format!("{} is not a directory", dir.display())));
    }
    let mut reports: Vec<Report> = Vec::new();
    for entry in files_in(dir)? {
        let path = entry.join("metrics.json");
        if path.is_file() {
            reports.push(read_json(&path).map_err(|e| Failure::artifact(&path.display().to_string(), e))?);
        }
    }
    if reports.is_empty() {
        return Err(Failure::dependency(format!("no reports (*/metrics.json) under {}", dir.display())));
    }
    let order: Vec<String> = default_ladder(0).into_iter().map(|s| s.id).collect();
    let rank = |r: &Report| order.iter().position(|id| *id == r.spec.id).unwrap_or(order.len());
    reports.sort_by(|a, b| rank(a).cmp(&rank(b)).then_with(|| a.spec.id.cmp(&b.spec.id)));
    let mut table = String::from(TABLE_HEADER);
    for r in &reports {
        table.push_str(&table_row(r));
    }
    fs::write(dir.join("table.md"), &table)?;
    Ok(table)
}
