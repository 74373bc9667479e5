//! Pipeline configuration file.
//!
//! JSON object; every field is optional and falls back to the defaults
//! below. Unknown fields are rejected.
//!
//! ```json
//! {
//!   "seed": 7,
//!   "games_per_profile": 60,
//!   "sim": { "max_steps": 40 },
//!   "layouts": ["Dims176", "Dims530"],
//!   "window": { "length": 8, "stride": 4 },
//!   "balance_target": null,
//!   "split": { "train": 0.8, "val": 0.1, "test": 0.1 },
//!   "train": { "epochs": 20, "learning_rate": 0.001 },
//!   "baseline": { "epochs": 60 },
//!   "ladder": [],
//!   "out_dir": "out"
//! }
//! ```
//!
//! `balance_target: null` balances every profile down to the smallest
//! profile's window total. An empty `ladder` runs every default rung.

use std::path::{Path, PathBuf};

use pbench_core::dataset::SplitSpec;
use pbench_core::eval::ladder::{default_ladder, ExperimentSpec, InputFeatures};
use pbench_core::features::FeatureLayout;
use pbench_core::models::{BaselineConfig, TrainConfig};
use pbench_core::simulator::SimConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::failure::{CliResult, Failure};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowConfig {
    pub length: usize,
    pub stride: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig { length: 8, stride: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for Fractions {
    fn default() -> Self {
        Fractions { train: 0.8, val: 0.1, test: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub games_per_profile: usize,
    pub sim: SimConfig,
    pub layouts: Vec<FeatureLayout>,
    pub window: WindowConfig,
    pub balance_target: Option<usize>,
    pub split: Fractions,
    pub train: TrainConfig,
    pub baseline: BaselineConfig,
    /// Rung ids from the default ladder, in run order.
    pub ladder: Vec<String>,
    pub out_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 7,
            games_per_profile: 60,
            sim: SimConfig::default(),
            layouts: vec![FeatureLayout::Dims176, FeatureLayout::Dims530],
            window: WindowConfig::default(),
            balance_target: None,
            split: Fractions::default(),
            train: TrainConfig::default(),
            baseline: BaselineConfig::default(),
            ladder: Vec::new(),
            out_dir: PathBuf::from("out"),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec { train: self.split.train, val: self.split.val, test: self.split.test, seed: self.seed }
    }

    pub fn rungs(&self) -> CliResult<Vec<ExperimentSpec>> {
        let all = default_ladder(self.seed);
        if self.ladder.is_empty() {
            return Ok(all);
        }
        self.ladder
            .iter()
            .map(|id| {
                all.iter().find(|s| &s.id == id).cloned().ok_or_else(|| {
                    let known: Vec<&str> = all.iter().map(|s| s.id.as_str()).collect();
                    Failure::config(format!("unknown ladder rung {id:?}; known: {}", known.join(", ")))
                })
            })
            .collect()
    }

    /// Checks every stage's settings before anything runs.
    pub fn validate(&self) -> CliResult<()> {
        if self.games_per_profile == 0 {
            return Err(Failure::config("games_per_profile must be at least 1"));
        }
        self.sim.validate()?;
        if self.window.length == 0 || self.window.stride == 0 {
            return Err(Failure::config("window length and stride must be positive"));
        }
        if self.sim.max_steps < self.window.length {
            return Err(Failure::config("sim.max_steps must be at least the window length"));
        }
        if self.balance_target == Some(0) {
            return Err(Failure::config("balance_target must be positive"));
        }
        self.split_spec().validate()?;
        self.train.validate()?;
        let b = &self.baseline;
        if !(b.learning_rate > 0.0) || b.epochs == 0 || b.batch_size == 0 || !(b.l2 >= 0.0) {
            return Err(Failure::config("baseline needs positive learning rate, epochs and batch size and l2 >= 0"));
        }
        for rung in self.rungs()? {
            rung.validate()?;
            let layout = match rung.features {
                InputFeatures::Dims176 => Some(FeatureLayout::Dims176),
                InputFeatures::Dims530 => Some(FeatureLayout::Dims530),
                InputFeatures::Aggregate52 => None,
            };
            if let Some(l) = layout {
                if !self.layouts.contains(&l) {
                    return Err(Failure::config(format!("rung {} needs layout {l:?}, which is not in layouts", rung.id)));
                }
            }
        }
        Ok(())
    }

    /// Digest of everything that affects results; the output location does not.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(&PipelineConfig { out_dir: PathBuf::new(), ..self.clone() }).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}
