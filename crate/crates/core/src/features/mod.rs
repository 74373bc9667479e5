//! Per-decision feature extraction.
//!
//! The balanced layout is 176 values per decision: 48 behavioral prefix
//! statistics followed by a 128-bucket hashed embedding of the decision's
//! text. Behavioral values at step `t` depend only on decisions `0..=t`.

pub mod tensor_file;
pub mod text;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulator::{manhattan, Category, DecisionPoint, Dungeon, Outcome, Session, CATEGORY_COUNT};
use crate::taxonomy::Profile;

pub use text::{embed_text, embed_text_buckets};

pub const SCHEMA_VERSION: u32 = 1;

pub const TRANSITION_DIM: usize = 15;
pub const AVAIL_SELECT_DIM: usize = 12;
pub const TEMPORAL_DIM: usize = 15;
pub const MOVEMENT_DIM: usize = 6;
pub const BEHAVIOR_DIM: usize = TRANSITION_DIM + AVAIL_SELECT_DIM + TEMPORAL_DIM + MOVEMENT_DIM;
pub const TEXT_DIM: usize = 128;
pub const FEATURE_DIM: usize = BEHAVIOR_DIM + TEXT_DIM;

pub const LEGACY_TEXT_DIM: usize = 512;
pub const LEGACY_BEHAVIOR_DIM: usize = 18;
pub const LEGACY_DIM: usize = LEGACY_TEXT_DIM + LEGACY_BEHAVIOR_DIM;

pub const COMPLETION_DIM: usize = 4;
pub const AGGREGATE_DIM: usize = BEHAVIOR_DIM + COMPLETION_DIM;

/// Which per-decision layout a tensor uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureLayout {
    Dims176,
    Dims530,
}

impl FeatureLayout {
    pub fn dim(self) -> usize {
        match self {
            FeatureLayout::Dims176 => FEATURE_DIM,
            FeatureLayout::Dims530 => LEGACY_DIM,
        }
    }

    pub fn from_dim(dim: usize) -> Option<Self> {
        match dim {
            FEATURE_DIM => Some(FeatureLayout::Dims176),
            LEGACY_DIM => Some(FeatureLayout::Dims530),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureGroup {
    Transition,
    AvailSelect,
    Temporal,
    Movement,
    Text,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slot {
    pub name: String,
    pub group: FeatureGroup,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub version: u32,
    pub slots: Vec<Slot>,
}

fn category_pairs() -> impl Iterator<Item = (usize, usize)> {
    (0..CATEGORY_COUNT).flat_map(|a| (a + 1..CATEGORY_COUNT).map(move |b| (a, b)))
}

fn behavioral_slot_names() -> Vec<(String, FeatureGroup)> {
    let cat = |i: usize| Category::ALL[i].name();
    let mut names = Vec::with_capacity(BEHAVIOR_DIM);
    for c in 0..CATEGORY_COUNT {
        names.push((format!("trans_self_{}", cat(c)), FeatureGroup::Transition));
    }
    for (a, b) in category_pairs() {
        names.push((format!("trans_{}_{}", cat(a), cat(b)), FeatureGroup::Transition));
    }
    for c in 0..CATEGORY_COUNT {
        names.push((format!("avail_{}", cat(c)), FeatureGroup::AvailSelect));
    }
    for c in 0..CATEGORY_COUNT {
        names.push((format!("select_given_avail_{}", cat(c)), FeatureGroup::AvailSelect));
    }
    names.push(("choice_set_size".into(), FeatureGroup::AvailSelect));
    names.push(("selection_entropy".into(), FeatureGroup::AvailSelect));
    for phase in ["early", "mid", "late"] {
        for c in 0..CATEGORY_COUNT {
            names.push((format!("{phase}_{}", cat(c)), FeatureGroup::Temporal));
        }
    }
    for n in ["rooms_visited", "revisit_rate", "mean_distance", "net_over_path", "direction_change", "backtrack"] {
        names.push((format!("move_{n}"), FeatureGroup::Movement));
    }
    names
}

impl FeatureSchema {
    /// The 176-slot balanced layout.
    pub fn balanced() -> Self {
        let mut slots: Vec<Slot> = behavioral_slot_names()
            .into_iter()
            .chain((0..TEXT_DIM).map(|i| (format!("text_{i:03}"), FeatureGroup::Text)))
            .enumerate()
            .map(|(index, (name, group))| Slot { name, group, index })
            .collect();
        slots.shrink_to_fit();
        Self { version: SCHEMA_VERSION, slots }
    }

    /// Column names of the aggregate per-game vector.
    pub fn aggregate_names() -> Vec<String> {
        behavioral_slot_names()
            .into_iter()
            .map(|(n, _)| n)
            .chain(["norm_length", "exit_reached", "died", "mean_choice_set_size"].map(String::from))
            .collect()
    }

    pub fn group_size(&self, group: FeatureGroup) -> usize {
        self.slots.iter().filter(|s| s.group == group).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub schema_version: u32,
}

/// A window of consecutive per-decision feature rows from one game.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSample {
    pub game_id: u64,
    pub profile: Profile,
    /// First step of the window; unknown for samples read back from a
    /// tensor file, which does not record it.
    pub window_start: Option<usize>,
    pub rows: usize,
    pub dim: usize,
    /// Row-major `rows × dim`.
    pub data: Vec<f64>,
}

impl SequenceSample {
    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateVector {
    pub values: Vec<f64>,
}

fn chosen_category(d: &DecisionPoint) -> usize {
    d.chosen_action().category.index()
}

fn pair_index(a: usize, b: usize) -> usize {
    let (a, b) = if a < b { (a, b) } else { (b, a) };
    category_pairs().position(|p| p == (a, b)).unwrap()
}

/// Self-transition rates for the five categories, then the ten unordered
/// cross-category pair rates. All zero when fewer than two decisions.
pub fn transition_features(prefix: &[DecisionPoint]) -> [f64; TRANSITION_DIM] {
    let mut out = [0.0; TRANSITION_DIM];
    if prefix.len() < 2 {
        return out;
    }
    for w in prefix.windows(2) {
        let (a, b) = (chosen_category(&w[0]), chosen_category(&w[1]));
        if a == b {
            out[a] += 1.0;
        } else {
            out[CATEGORY_COUNT + pair_index(a, b)] += 1.0;
        }
    }
    let total = (prefix.len() - 1) as f64;
    out.iter_mut().for_each(|v| *v /= total);
    out
}

/// Availability rate and selection-given-availability rate per category,
/// mean choice-set size over 6, and selection entropy over ln 5.
pub fn avail_select_features(prefix: &[DecisionPoint]) -> [f64; AVAIL_SELECT_DIM] {
    let mut out = [0.0; AVAIL_SELECT_DIM];
    if prefix.is_empty() {
        return out;
    }
    let n = prefix.len() as f64;
    let mut offered = [0usize; CATEGORY_COUNT];
    let mut selected = [0usize; CATEGORY_COUNT];
    let mut size_total = 0usize;
    for d in prefix {
        let mut here = [false; CATEGORY_COUNT];
        for a in &d.available {
            here[a.category.index()] = true;
        }
        let c = chosen_category(d);
        for k in 0..CATEGORY_COUNT {
            if here[k] {
                offered[k] += 1;
            }
        }
        selected[c] += 1;
        size_total += d.available.len();
    }
    for k in 0..CATEGORY_COUNT {
        out[k] = offered[k] as f64 / n;
        out[CATEGORY_COUNT + k] = if offered[k] == 0 {
            0.0
        } else {
            // The chosen category is always on offer.
            selected[k] as f64 / offered[k] as f64
        };
    }
    out[10] = size_total as f64 / n / 6.0;
    let entropy: f64 = selected
        .iter()
        .filter(|&&s| s > 0)
        .map(|&s| {
            let p = s as f64 / n;
            -p * p.ln()
        })
        .sum();
    out[11] = entropy / (CATEGORY_COUNT as f64).ln();
    out
}

/// Sizes of the early, mid and late phases of `n` decisions; remainders go
/// to the later phases.
pub fn phase_sizes(n: usize) -> [usize; 3] {
    let base = n / 3;
    match n % 3 {
        0 => [base, base, base],
        1 => [base, base, base + 1],
        _ => [base, base + 1, base + 1],
    }
}

/// Per-phase category selection distributions.
pub fn temporal_features(prefix: &[DecisionPoint]) -> [f64; TEMPORAL_DIM] {
    let mut out = [0.0; TEMPORAL_DIM];
    let mut start = 0;
    for (phase, size) in phase_sizes(prefix.len()).into_iter().enumerate() {
        for d in &prefix[start..start + size] {
            out[phase * CATEGORY_COUNT + chosen_category(d)] += 1.0;
        }
        if size > 0 {
            for v in &mut out[phase * CATEGORY_COUNT..(phase + 1) * CATEGORY_COUNT] {
                *v /= size as f64;
            }
        }
        start += size;
    }
    out
}

/// Path statistics of the chosen movement actions, starting from the
/// dungeon's start room.
pub fn movement_features(prefix: &[DecisionPoint], dungeon: &Dungeon) -> [f64; MOVEMENT_DIM] {
    let start = dungeon.start;
    let mut pos = start;
    let mut visited = std::collections::HashSet::from([start]);
    let mut moves: Vec<[i32; 2]> = Vec::new();
    let mut distance_sum = 0.0;
    for d in prefix {
        if let Some(delta) = d.chosen_action().move_delta {
            pos = [pos[0] + delta[0], pos[1] + delta[1]];
            visited.insert(pos);
            moves.push(delta);
        }
        distance_sum += manhattan(pos, start) as f64;
    }
    let m = moves.len() as f64;
    let unique = visited.len() as f64;
    let span = (dungeon.width - 1 + dungeon.height - 1).max(1) as f64;
    let pairs = moves.len().saturating_sub(1);
    let (mut turns, mut reversals) = (0usize, 0usize);
    for w in moves.windows(2) {
        if w[0] != w[1] {
            turns += 1;
        }
        if w[1] == [-w[0][0], -w[0][1]] {
            reversals += 1;
        }
    }
    let rate = |count: usize| if pairs == 0 { 0.0 } else { count as f64 / pairs as f64 };
    [
        unique / dungeon.room_count() as f64,
        if moves.is_empty() { 0.0 } else { 1.0 - (unique - 1.0) / m },
        if prefix.is_empty() { 0.0 } else { distance_sum / prefix.len() as f64 / span },
        if moves.is_empty() { 0.0 } else { manhattan(pos, start) as f64 / m },
        rate(turns),
        rate(reversals),
    ]
}

/// The 48 behavioral prefix features in schema order.
pub fn behavioral_features(prefix: &[DecisionPoint], dungeon: &Dungeon) -> Vec<f64> {
    let mut v = Vec::with_capacity(BEHAVIOR_DIM);
    v.extend(transition_features(prefix));
    v.extend(avail_select_features(prefix));
    v.extend(temporal_features(prefix));
    v.extend(movement_features(prefix, dungeon));
    v
}

fn decision_text(d: &DecisionPoint) -> String {
    format!("{} {}", d.room_text, d.action_text)
}

fn check_step(session: &Session, step_index: usize) -> Result<()> {
    if step_index >= session.len() {
        return Err(Error::IndexOutOfRange { index: step_index, len: session.len() });
    }
    Ok(())
}

pub fn featurize_decision(session: &Session, step_index: usize, dungeon: &Dungeon) -> Result<FeatureVector> {
    check_step(session, step_index)?;
    let prefix = &session.decisions[..=step_index];
    let mut values = behavioral_features(prefix, dungeon);
    values.extend(embed_text(&decision_text(&session.decisions[step_index])));
    Ok(FeatureVector { values, schema_version: SCHEMA_VERSION })
}

/// Legacy text-dominated layout: 512 hashed text buckets followed by the
/// first 18 behavioral slots of the balanced layout.
pub fn featurize_legacy_530(session: &Session, step_index: usize, dungeon: &Dungeon) -> Result<Vec<f64>> {
    check_step(session, step_index)?;
    let prefix = &session.decisions[..=step_index];
    let mut values = embed_text_buckets(&decision_text(&session.decisions[step_index]), LEGACY_TEXT_DIM);
    values.extend_from_slice(&behavioral_features(prefix, dungeon)[..LEGACY_BEHAVIOR_DIM]);
    Ok(values)
}

pub fn featurize_sequence(session: &Session, window_start: usize, window_len: usize, dungeon: &Dungeon) -> Result<SequenceSample> {
    featurize_sequence_with(session, window_start, window_len, dungeon, FeatureLayout::Dims176)
}

pub fn featurize_sequence_with(
    session: &Session,
    window_start: usize,
    window_len: usize,
    dungeon: &Dungeon,
    layout: FeatureLayout,
) -> Result<SequenceSample> {
    let end = window_start + window_len;
    if window_len == 0 || end > session.len() {
        return Err(Error::IndexOutOfRange { index: end.max(window_start), len: session.len() });
    }
    let dim = layout.dim();
    let mut data = Vec::with_capacity(window_len * dim);
    for t in window_start..end {
        match layout {
            FeatureLayout::Dims176 => data.extend(featurize_decision(session, t, dungeon)?.values),
            FeatureLayout::Dims530 => data.extend(featurize_legacy_530(session, t, dungeon)?),
        }
    }
    Ok(SequenceSample {
        game_id: session.game_id,
        profile: session.profile,
        window_start: Some(window_start),
        rows: window_len,
        dim,
        data,
    })
}

/// Whole-game behavioral features plus completion metrics: normalized
/// length, exit flag, death flag and mean choice-set size.
pub fn aggregate_features(session: &Session, dungeon: &Dungeon, max_steps: usize) -> AggregateVector {
    aggregate_prefix_features(session, session.len(), dungeon, max_steps)
}

/// Aggregate vector over the first `end` decisions. Outcome flags are set
/// only when the prefix is the whole game.
pub fn aggregate_prefix_features(session: &Session, end: usize, dungeon: &Dungeon, max_steps: usize) -> AggregateVector {
    let end = end.min(session.len());
    let prefix = &session.decisions[..end];
    let complete = end == session.len();
    let mut values = behavioral_features(prefix, dungeon);
    let n = end.max(1) as f64;
    values.push(end as f64 / max_steps as f64);
    values.push(f64::from(u8::from(complete && session.outcome == Outcome::ExitReached)));
    values.push(f64::from(u8::from(complete && session.outcome == Outcome::Died)));
    values.push(prefix.iter().map(|d| d.available.len() as f64).sum::<f64>() / n);
    AggregateVector { values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{play_game, ActionInstance, Affinity, SimConfig};

    fn act(category: Category, move_delta: Option<[i32; 2]>) -> ActionInstance {
        ActionInstance {
            category,
            valence: 0.0,
            order: 0.0,
            affinity: Affinity::default(),
            text: String::new(),
            move_delta,
        }
    }

    fn decision(available: Vec<ActionInstance>, chosen: usize) -> DecisionPoint {
        DecisionPoint {
            step: 0,
            room: [0, 0],
            available,
            chosen,
            room_text: "a room".into(),
            action_text: "you act".into(),
        }
    }

    fn picks(cats: &[Category]) -> Vec<DecisionPoint> {
        cats.iter().map(|&c| decision(vec![act(c, None)], 0)).collect()
    }

    fn walk(deltas: &[[i32; 2]]) -> Vec<DecisionPoint> {
        deltas
            .iter()
            .map(|&d| decision(vec![act(Category::Exploratory, Some(d))], 0))
            .collect()
    }

    fn open_dungeon() -> Dungeon {
        let mut d = Dungeon::generate(1, &SimConfig::default()).unwrap();
        d.start = [2, 2];
        d
    }

    use Category::*;

    #[test]
    fn dimension_identities() {
        assert_eq!(TRANSITION_DIM + AVAIL_SELECT_DIM + TEMPORAL_DIM + MOVEMENT_DIM, 48);
        assert_eq!(BEHAVIOR_DIM + TEXT_DIM, 176);
        assert_eq!(LEGACY_TEXT_DIM + LEGACY_BEHAVIOR_DIM, 530);
        let schema = FeatureSchema::balanced();
        assert_eq!(schema.slots.len(), 176);
        assert_eq!(schema.group_size(FeatureGroup::Transition), 15);
        assert_eq!(schema.group_size(FeatureGroup::AvailSelect), 12);
        assert_eq!(schema.group_size(FeatureGroup::Temporal), 15);
        assert_eq!(schema.group_size(FeatureGroup::Movement), 6);
        assert_eq!(schema.group_size(FeatureGroup::Text), 128);
        let names: std::collections::HashSet<_> = schema.slots.iter().map(|s| &s.name).collect();
        assert_eq!(names.len(), 176);
        assert_eq!(FeatureSchema::aggregate_names().len(), AGGREGATE_DIM);
    }

    #[test]
    fn transitions() {
        assert_eq!(transition_features(&picks(&[Combat])), [0.0; 15]);
        let t = transition_features(&picks(&[Combat, Combat, Combat]));
        assert_eq!(t[0], 1.0);
        assert_eq!(t.iter().sum::<f64>(), 1.0);
        let t = transition_features(&picks(&[Combat, Social, Combat, Social]));
        assert_eq!(t[5], 1.0, "pair (combat, social) is the first cross slot");
        assert_eq!(t.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn avail_select() {
        let f = avail_select_features(&picks(&[Combat, Combat, Combat]));
        assert_eq!(f[0], 1.0);
        assert_eq!(f[5], 1.0);
        assert_eq!(f[11], 0.0);
        assert_eq!(f[6], 0.0, "never-offered category has sel|avail 0");
        assert!((f[10] - 1.0 / 6.0).abs() < 1e-15);

        let all: Vec<ActionInstance> = Category::ALL.iter().map(|&c| act(c, None)).collect();
        let uniform: Vec<DecisionPoint> = (0..5).map(|k| decision(all.clone(), k)).collect();
        let f = avail_select_features(&uniform);
        assert!((f[11] - 1.0).abs() < 1e-12);
        for k in 0..5 {
            assert_eq!(f[k], 1.0);
            assert!((f[5 + k] - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn temporal_phases() {
        assert_eq!(phase_sizes(1), [0, 0, 1]);
        assert_eq!(phase_sizes(2), [0, 1, 1]);
        assert_eq!(phase_sizes(6), [2, 2, 2]);
        assert_eq!(phase_sizes(7), [2, 2, 3]);
        let t = temporal_features(&picks(&[Cautious]));
        assert_eq!(&t[..10], &[0.0; 10]);
        assert_eq!(&t[10..], &[0.0, 0.0, 0.0, 0.0, 1.0]);
        let t = temporal_features(&picks(&[Exploratory; 9]));
        for phase in 0..3 {
            assert_eq!(&t[phase * 5..phase * 5 + 5], &[0.0, 0.0, 0.0, 1.0, 0.0]);
        }
        let t = temporal_features(&picks(&[Combat, Combat, Social, Social, Social, Social]));
        assert_eq!(&t[..5], &[1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(&t[5..10], &[0.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(&t[10..], &[0.0, 1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn movement() {
        let d = open_dungeon();
        let m = movement_features(&picks(&[Combat, Social]), &d);
        assert_eq!(m, [1.0 / 36.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let m = movement_features(&walk(&[[1, 0], [1, 0], [1, 0]]), &d);
        assert_eq!(m[1], 0.0);
        assert_eq!(m[3], 1.0);
        assert_eq!(m[4], 0.0);
        assert_eq!(m[5], 0.0);
        assert!((m[2] - 2.0 / 10.0).abs() < 1e-15, "mean of distances 1,2,3 over span 10");
        let m = movement_features(&walk(&[[1, 0], [-1, 0]]), &d);
        assert_eq!(m[3], 0.0);
        assert_eq!(m[5], 1.0);
        assert_eq!(m[4], 1.0);
        assert_eq!(m[1], 0.5);
    }

    #[test]
    fn decision_vector_contract() {
        let cfg = SimConfig::default();
        let s = play_game("LE-Wanderlust".parse().unwrap(), 9, &cfg).unwrap();
        let d = Dungeon::generate(s.seed, &cfg).unwrap();
        let v = featurize_decision(&s, 0, &d).unwrap();
        assert_eq!(v.values.len(), FEATURE_DIM);
        assert_eq!(&v.values[..TRANSITION_DIM], &[0.0; TRANSITION_DIM]);
        let norm: f64 = v.values[BEHAVIOR_DIM..].iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-9);
        assert!(matches!(
            featurize_decision(&s, s.len(), &d),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn truncation_equivalence() {
        let cfg = SimConfig::default();
        let s = play_game("CG-Safety".parse().unwrap(), 4, &cfg).unwrap();
        let d = Dungeon::generate(s.seed, &cfg).unwrap();
        for t in 0..s.len() {
            let full = featurize_decision(&s, t, &d).unwrap();
            let cut = featurize_decision(&s.truncated(t + 1), t, &d).unwrap();
            assert_eq!(full, cut);
        }
    }

    #[test]
    fn windows_share_rows() {
        let cfg = SimConfig::default();
        let s = (0..50)
            .map(|seed| play_game("TN-Wealth".parse().unwrap(), seed, &cfg).unwrap())
            .find(|s| s.len() >= 12)
            .unwrap();
        let d = Dungeon::generate(s.seed, &cfg).unwrap();
        let whole = featurize_sequence(&s, 0, s.len(), &d).unwrap();
        assert_eq!(whole.rows, s.len());
        assert_eq!(whole.data.len(), s.len() * FEATURE_DIM);
        let w = featurize_sequence(&s, 4, 8, &d).unwrap();
        let v = featurize_sequence(&s, 2, 8, &d).unwrap();
        for t in 4..10 {
            assert_eq!(w.row(t - 4), v.row(t - 2));
            assert_eq!(w.row(t - 4), whole.row(t));
        }
        assert!(featurize_sequence(&s, s.len() - 2, 3, &d).is_err());
    }

    #[test]
    fn legacy_layout() {
        let cfg = SimConfig::default();
        let s = play_game("LG-Speed".parse().unwrap(), 2, &cfg).unwrap();
        let d = Dungeon::generate(s.seed, &cfg).unwrap();
        let t = s.len() - 1;
        let legacy = featurize_legacy_530(&s, t, &d).unwrap();
        let balanced = featurize_decision(&s, t, &d).unwrap();
        assert_eq!(legacy.len(), 530);
        assert_eq!(&legacy[512..], &balanced.values[..18]);
        assert!((512.0f64 / 530.0 * 100.0 - 96.6).abs() < 0.05);
        assert!((128.0f64 / 176.0 * 100.0 - 72.7).abs() < 0.05);

        let mut quiet = s.clone();
        quiet.decisions[t].room_text.clear();
        quiet.decisions[t].action_text.clear();
        let legacy = featurize_legacy_530(&quiet, t, &d).unwrap();
        assert!(legacy[..512].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn aggregate_metrics() {
        let cfg = SimConfig::default();
        for seed in 0..40 {
            let s = play_game("NG-Speed".parse().unwrap(), seed, &cfg).unwrap();
            let d = Dungeon::generate(s.seed, &cfg).unwrap();
            let a = aggregate_features(&s, &d, cfg.max_steps);
            assert_eq!(a.values.len(), AGGREGATE_DIM);
            assert!(a.values[48] > 0.0 && a.values[48] <= 1.0);
            assert!(a.values.iter().all(|v| v.is_finite()));
            if s.outcome == Outcome::ExitReached {
                assert_eq!((a.values[49], a.values[50]), (1.0, 0.0));
            }
        }
    }
}
