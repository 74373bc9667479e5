//! Windowing, sequence-aware class balancing and game-exclusive splits.
//!
//! Balancing and splitting operate on whole games: a game contributes all of
//! its windows to exactly one split, or is dropped entirely.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{aggregate_prefix_features, featurize_sequence_with, FeatureLayout, SequenceSample};
use crate::seed;
use crate::simulator::{Dungeon, Session, SimConfig};
use crate::taxonomy::Profile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub game_id: u64,
    pub start: usize,
    pub length: usize,
}

/// `(start, length)` pairs for a game of `len` decisions. Games shorter than
/// the window yield a single full-game window.
pub fn window_bounds(len: usize, window: usize, stride: usize) -> Vec<(usize, usize)> {
    assert!(window >= 1 && stride >= 1, "window and stride must be positive");
    if len == 0 {
        return Vec::new();
    }
    if len < window {
        return vec![(0, len)];
    }
    (0..=len - window).step_by(stride).map(|s| (s, window)).collect()
}

pub fn window_sessions(sessions: &[Session], window: usize, stride: usize) -> Vec<Window> {
    sessions
        .iter()
        .flat_map(|s| {
            window_bounds(s.len(), window, stride)
                .into_iter()
                .map(move |(start, length)| Window { game_id: s.game_id, start, length })
        })
        .collect()
}

/// Feature tensors for every window of every session, in session order.
pub fn featurize_windows(
    sessions: &[Session],
    window: usize,
    stride: usize,
    layout: FeatureLayout,
    sim: &SimConfig,
) -> Result<Vec<SequenceSample>> {
    let per_game = sessions
        .par_iter()
        .map(|s| {
            let dungeon = Dungeon::generate(s.seed, sim)?;
            window_bounds(s.len(), window, stride)
                .into_iter()
                .map(|(start, len)| featurize_sequence_with(s, start, len, &dungeon, layout))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_game.into_iter().flatten().collect())
}

/// Aggregate vector of the game prefix ending at a window's last step.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub game_id: u64,
    pub profile: crate::taxonomy::Profile,
    pub values: Vec<f64>,
}

/// One [`AggregateRow`] per window, aligned with [`featurize_windows`].
pub fn aggregate_windows(sessions: &[Session], window: usize, stride: usize, sim: &SimConfig) -> Result<Vec<AggregateRow>> {
    let per_game = sessions
        .par_iter()
        .map(|s| {
            let dungeon = Dungeon::generate(s.seed, sim)?;
            Ok(window_bounds(s.len(), window, stride)
                .into_iter()
                .map(|(start, len)| AggregateRow {
                    game_id: s.game_id,
                    profile: s.profile,
                    values: aggregate_prefix_features(s, start + len, &dungeon, sim.max_steps).values,
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_game.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GameEntry {
    pub game_id: u64,
    pub windows: usize,
}

/// Games grouped by profile, with each game's window count.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorpusIndex {
    pub profiles: BTreeMap<Profile, Vec<GameEntry>>,
}

impl CorpusIndex {
    pub fn from_sessions(sessions: &[Session], window: usize, stride: usize) -> Self {
        let mut index = CorpusIndex::default();
        for s in sessions {
            index.profiles.entry(s.profile).or_default().push(GameEntry {
                game_id: s.game_id,
                windows: window_bounds(s.len(), window, stride).len(),
            });
        }
        index
    }

    pub fn total(&self, profile: Profile) -> usize {
        self.profiles.get(&profile).map_or(0, |g| g.iter().map(|e| e.windows).sum())
    }

    pub fn totals(&self) -> BTreeMap<Profile, usize> {
        self.profiles.keys().map(|&p| (p, self.total(p))).collect()
    }

    pub fn total_windows(&self) -> usize {
        self.totals().values().sum()
    }

    pub fn game_count(&self) -> usize {
        self.profiles.values().map(Vec::len).sum()
    }

    /// Largest over smallest per-class window total.
    pub fn imbalance_ratio(&self) -> f64 {
        let totals = self.totals();
        let max = totals.values().copied().max().unwrap_or(0);
        let min = totals.values().copied().min().unwrap_or(0);
        if min == 0 {
            f64::INFINITY
        } else {
            max as f64 / min as f64
        }
    }

    pub fn max_game_windows(&self) -> usize {
        self.profiles.values().flatten().map(|e| e.windows).max().unwrap_or(0)
    }

    pub fn game_ids(&self) -> Vec<u64> {
        let mut ids: Vec<u64> = self.profiles.values().flatten().map(|e| e.game_id).collect();
        ids.sort_unstable();
        ids
    }

    pub fn to_file(&self, seed: u64, target: usize) -> BalancedIndexFile {
        BalancedIndexFile {
            profiles: self
                .profiles
                .iter()
                .map(|(p, games)| {
                    (
                        p.code(),
                        ProfileGames {
                            games: games.iter().map(|g| g.game_id).collect(),
                            windows: games.iter().map(|g| g.windows).sum(),
                        },
                    )
                })
                .collect(),
            seed,
            target,
        }
    }

    /// Rebuilds an index from a balanced-index file, taking per-game window
    /// counts from `full`.
    pub fn from_file(file: &BalancedIndexFile, full: &CorpusIndex) -> Result<Self> {
        let counts: HashMap<u64, usize> = full
            .profiles
            .values()
            .flatten()
            .map(|e| (e.game_id, e.windows))
            .collect();
        let mut index = CorpusIndex::default();
        for (code, pg) in &file.profiles {
            let profile: Profile = code.parse()?;
            let games = pg
                .games
                .iter()
                .map(|&id| {
                    counts
                        .get(&id)
                        .map(|&windows| GameEntry { game_id: id, windows })
                        .ok_or_else(|| Error::Format(format!("game {id} missing from corpus")))
                })
                .collect::<Result<Vec<_>>>()?;
            index.profiles.insert(profile, games);
        }
        Ok(index)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileGames {
    pub games: Vec<u64>,
    pub windows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalancedIndexFile {
    pub profiles: BTreeMap<String, ProfileGames>,
    pub seed: u64,
    pub target: usize,
}

/// Removes uniformly random whole games from every class whose window total
/// exceeds `target` until it no longer does.
pub fn balance(index: &CorpusIndex, target: usize, seed_value: u64) -> Result<CorpusIndex> {
    let largest = index.max_game_windows();
    if largest > target {
        return Err(Error::TargetTooSmall { target, windows: largest });
    }
    let mut out = CorpusIndex::default();
    for (&profile, games) in &index.profiles {
        let mut kept = games.clone();
        let mut total: usize = kept.iter().map(|g| g.windows).sum();
        let mut rng = seed::rng(&[seed::stream::BALANCE, seed_value, profile.index() as u64]);
        while total > target {
            let victim = kept.remove(rng.gen_range(0..kept.len()));
            total -= victim.windows;
        }
        out.profiles.insert(profile, kept);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub val: f64,
    pub test: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self { train: 0.8, val: 0.1, test: 0.1, seed: 0 }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let f = [self.train, self.val, self.test];
        if f.iter().any(|&x| !(x > 0.0)) || ((f.iter().sum::<f64>()) - 1.0).abs() > 1e-9 {
            return Err(Error::ConfigInvalid(format!(
                "split fractions must be positive and sum to 1, got {f:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitPart {
    Train,
    Val,
    Test,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Splits {
    pub train: CorpusIndex,
    pub val: CorpusIndex,
    pub test: CorpusIndex,
}

impl Splits {
    pub fn part(&self, part: SplitPart) -> &CorpusIndex {
        match part {
            SplitPart::Train => &self.train,
            SplitPart::Val => &self.val,
            SplitPart::Test => &self.test,
        }
    }

    /// `game_id → part`, the split file contents.
    pub fn assignment(&self) -> BTreeMap<u64, SplitPart> {
        let mut out = BTreeMap::new();
        for part in [SplitPart::Train, SplitPart::Val, SplitPart::Test] {
            for id in self.part(part).game_ids() {
                out.insert(id, part);
            }
        }
        out
    }

    pub fn from_assignment(index: &CorpusIndex, assignment: &BTreeMap<u64, SplitPart>) -> Self {
        let mut splits = Splits::default();
        for (&profile, games) in &index.profiles {
            for g in games {
                let target = match assignment.get(&g.game_id) {
                    Some(SplitPart::Train) => &mut splits.train,
                    Some(SplitPart::Val) => &mut splits.val,
                    Some(SplitPart::Test) => &mut splits.test,
                    None => continue,
                };
                target.profiles.entry(profile).or_default().push(*g);
            }
        }
        splits
    }
}

/// Stratified game-level split: each profile's games are shuffled and cut
/// by the rounded fractions.
pub fn split_by_game(index: &CorpusIndex, spec: &SplitSpec) -> Result<Splits> {
    spec.validate()?;
    let mut splits = Splits::default();
    for (&profile, games) in &index.profiles {
        let mut shuffled = games.clone();
        let mut rng = seed::rng(&[seed::stream::SPLIT, spec.seed, profile.index() as u64]);
        shuffled.shuffle(&mut rng);
        let n = shuffled.len();
        let n_train = ((spec.train * n as f64).round() as usize).min(n);
        let n_val = ((spec.val * n as f64).round() as usize).min(n - n_train);
        let by_id = |games: &[GameEntry]| {
            let mut v = games.to_vec();
            v.sort_by_key(|g| g.game_id);
            v
        };
        splits.train.profiles.insert(profile, by_id(&shuffled[..n_train]));
        splits.val.profiles.insert(profile, by_id(&shuffled[n_train..n_train + n_val]));
        splits.test.profiles.insert(profile, by_id(&shuffled[n_train + n_val..]));
    }
    Ok(splits)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}
