//! Corpus generation and the sessions JSON Lines format.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{play_game_with_id, Session, SimConfig};
use crate::error::{Error, Result};
use crate::seed;
use crate::taxonomy::{Profile, PROFILE_COUNT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub games_per_profile: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub sim: SimConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub master_seed: u64,
    pub games_per_profile: usize,
    pub total_sessions: usize,
    /// Sessions per profile code.
    pub counts: BTreeMap<String, usize>,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub sessions: Vec<Session>,
    pub manifest: Manifest,
}

pub fn game_seed(master_seed: u64, profile_index: usize, ordinal: usize) -> u64 {
    seed::mix(&[seed::stream::GAME, master_seed, profile_index as u64, ordinal as u64])
}

pub fn game_id(games_per_profile: usize, profile_index: usize, ordinal: usize) -> u64 {
    (profile_index * games_per_profile + ordinal) as u64
}

/// Plays `games_per_profile` games for every profile. Sessions come back
/// ordered by `game_id`; per-game seeds make the output independent of the
/// worker count.
pub fn generate_corpus(cfg: &CorpusConfig) -> Result<Corpus> {
    if cfg.games_per_profile == 0 {
        return Err(Error::ConfigInvalid("games_per_profile must be at least 1".into()));
    }
    cfg.sim.validate()?;
    let n = cfg.games_per_profile;
    let sessions = (0..PROFILE_COUNT * n)
        .into_par_iter()
        .map(|g| {
            let (pi, ordinal) = (g / n, g % n);
            let profile = Profile::from_index(pi).unwrap();
            play_game_with_id(game_id(n, pi, ordinal), profile, game_seed(cfg.master_seed, pi, ordinal), &cfg.sim)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut counts = BTreeMap::new();
    for s in &sessions {
        *counts.entry(s.profile.code()).or_insert(0) += 1;
    }
    Ok(Corpus {
        manifest: Manifest {
            master_seed: cfg.master_seed,
            games_per_profile: n,
            total_sessions: sessions.len(),
            counts,
        },
        sessions,
    })
}

pub fn write_sessions(path: &Path, sessions: &[Session]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for s in sessions {
        serde_json::to_writer(&mut w, s)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sessions(path: &Path) -> Result<Vec<Session>> {
    let r = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}
