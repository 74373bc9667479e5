//! Profile-driven gameplay simulation on a grid dungeon.
//!
//! Each game is a pure function of `(profile, seed, SimConfig)`. The dungeon
//! layout, the agent's choices and the rendered text draw from separate
//! streams derived from the game seed.

pub mod corpus;
pub mod text;

use std::collections::{BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
use crate::taxonomy::{LawAxis, MoralAxis, Motivation, Profile};

pub use corpus::{generate_corpus, read_sessions, write_sessions, Corpus, CorpusConfig, Manifest};
pub use text::{render_text, TemplateBank};

/// Action macro-categories. Transition, availability and phase features are
/// all computed over these five.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    Combat,
    Social,
    Acquisitive,
    Exploratory,
    Cautious,
}

pub const CATEGORY_COUNT: usize = 5;

impl Category {
    pub const ALL: [Category; CATEGORY_COUNT] = [
        Category::Combat,
        Category::Social,
        Category::Acquisitive,
        Category::Exploratory,
        Category::Cautious,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::Combat => "combat",
            Category::Social => "social",
            Category::Acquisitive => "acquisitive",
            Category::Exploratory => "exploratory",
            Category::Cautious => "cautious",
        }
    }
}

/// How strongly an action serves each motivation, in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Affinity {
    #[serde(rename = "Safety")]
    pub safety: f64,
    #[serde(rename = "Speed")]
    pub speed: f64,
    #[serde(rename = "Wanderlust")]
    pub wanderlust: f64,
    #[serde(rename = "Wealth")]
    pub wealth: f64,
}

impl Affinity {
    pub fn from_array(a: [f64; 4]) -> Self {
        Self { safety: a[0], speed: a[1], wanderlust: a[2], wealth: a[3] }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.safety, self.speed, self.wanderlust, self.wealth]
    }

    pub fn get(&self, m: Motivation) -> f64 {
        self.as_array()[m.rank()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionInstance {
    pub category: Category,
    pub valence: f64,
    pub order: f64,
    pub affinity: Affinity,
    pub text: String,
    /// Unit grid step for movement actions.
    #[serde(rename = "move", default, skip_serializing_if = "Option::is_none")]
    pub move_delta: Option<[i32; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionPoint {
    pub step: u32,
    pub room: [i32; 2],
    pub available: Vec<ActionInstance>,
    pub chosen: usize,
    pub room_text: String,
    pub action_text: String,
}

impl DecisionPoint {
    pub fn chosen_action(&self) -> &ActionInstance {
        &self.available[self.chosen]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    ExitReached,
    Died,
    StepLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub game_id: u64,
    pub profile: Profile,
    pub seed: u64,
    pub outcome: Outcome,
    pub decisions: Vec<DecisionPoint>,
}

impl Session {
    pub fn len(&self) -> usize {
        self.decisions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decisions.is_empty()
    }

    /// The session cut after its first `n` decisions.
    pub fn truncated(&self, n: usize) -> Session {
        let mut s = self.clone();
        s.decisions.truncate(n);
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Entity {
    Monster,
    Merchant,
    Villager,
    Treasure,
    ExitPortal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Room {
    pub coords: [i32; 2],
    pub entities: BTreeSet<Entity>,
    pub description_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dungeon {
    pub width: i32,
    pub height: i32,
    /// Row-major, `y * width + x`.
    pub rooms: Vec<Room>,
    pub start: [i32; 2],
    pub exit: [i32; 2],
}

pub fn manhattan(a: [i32; 2], b: [i32; 2]) -> i32 {
    (a[0] - b[0]).abs() + (a[1] - b[1]).abs()
}

impl Dungeon {
    /// Layout for a game seed. Featurization regenerates it from the session
    /// seed, so it never needs to be stored.
    pub fn generate(game_seed: u64, cfg: &SimConfig) -> Result<Dungeon> {
        cfg.validate()?;
        let (w, h) = (cfg.width, cfg.height);
        let mut rng = seed::rng(&[seed::stream::DUNGEON, game_seed]);
        let cells: Vec<[i32; 2]> = (0..h).flat_map(|y| (0..w).map(move |x| [x, y])).collect();
        let start = cells[rng.gen_range(0..cells.len())];
        let far = cells.iter().map(|&c| manhattan(c, start)).max().unwrap();
        let min_dist = ((w - 1 + h - 1 + 1) / 2).min(far).max(1);
        let candidates: Vec<[i32; 2]> = cells
            .iter()
            .copied()
            .filter(|&c| manhattan(c, start) >= min_dist)
            .collect();
        let exit = candidates[rng.gen_range(0..candidates.len())];
        let rooms = cells
            .iter()
            .map(|&coords| {
                let mut entities = BTreeSet::new();
                if coords == exit {
                    entities.insert(Entity::ExitPortal);
                } else if coords != start {
                    for (entity, p) in [
                        (Entity::Monster, cfg.monster_prob),
                        (Entity::Merchant, cfg.merchant_prob),
                        (Entity::Villager, cfg.villager_prob),
                        (Entity::Treasure, cfg.treasure_prob),
                    ] {
                        if rng.gen_bool(p) {
                            entities.insert(entity);
                        }
                    }
                }
                Room { coords, entities, description_seed: rng.gen() }
            })
            .collect();
        Ok(Dungeon { width: w, height: h, rooms, start, exit })
    }

    pub fn contains(&self, c: [i32; 2]) -> bool {
        c[0] >= 0 && c[1] >= 0 && c[0] < self.width && c[1] < self.height
    }

    pub fn index(&self, c: [i32; 2]) -> usize {
        (c[1] * self.width + c[0]) as usize
    }

    pub fn room(&self, c: [i32; 2]) -> &Room {
        &self.rooms[self.index(c)]
    }

    pub fn room_count(&self) -> usize {
        self.rooms.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub width: i32,
    pub height: i32,
    pub max_steps: usize,
    pub moral_gain: f64,
    pub order_gain: f64,
    pub motivation_gain: f64,
    /// Weight every agent places on its own consistency (or novelty) of category.
    pub consistency_gain: f64,
    /// Speed-affinity weight shared by all agents so that games terminate.
    pub exit_drive: f64,
    pub temperature: f64,
    /// Per-game spread of the policy temperature: each game multiplies
    /// `temperature` by `exp(spread · z)` with `z` standard normal, so some
    /// players act on their preferences more erratically than others.
    pub temperature_spread: f64,
    pub noise_scale: f64,
    pub monster_prob: f64,
    pub merchant_prob: f64,
    pub villager_prob: f64,
    pub treasure_prob: f64,
    /// Chance a merchant or villager wanders into a room as the agent enters.
    pub wanderer_prob: f64,
    /// Chance an attack on a monster kills the agent.
    pub death_prob: f64,
    /// Chance a room holds a shrine, offering a prayer and a desecration.
    pub shrine_prob: f64,
    /// Movement options offered per decision (at most, limited by walls).
    pub moves_offered: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            width: 6,
            height: 6,
            max_steps: 40,
            moral_gain: 2.0,
            order_gain: 1.0,
            motivation_gain: 1.5,
            consistency_gain: 0.6,
            exit_drive: 0.3,
            temperature: 1.0,
            temperature_spread: 0.6,
            noise_scale: 0.5,
            monster_prob: 0.3,
            merchant_prob: 0.3,
            villager_prob: 0.35,
            treasure_prob: 0.3,
            wanderer_prob: 0.8,
            death_prob: 0.03,
            shrine_prob: 0.8,
            moves_offered: 2,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::ConfigInvalid(m.to_string()));
        if self.width <= 0 || self.height <= 0 {
            return bad("dungeon dimensions must be positive");
        }
        if self.width * self.height < 2 {
            return bad("dungeon needs at least two rooms");
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive");
        }
        if !(self.moral_gain > 0.0 && self.order_gain > 0.0 && self.motivation_gain > 0.0) {
            return bad("agent gains must be positive");
        }
        if !(self.temperature > 0.0) {
            return bad("temperature must be positive");
        }
        if !(self.noise_scale >= 0.0)
            || !(self.consistency_gain >= 0.0)
            || !(self.exit_drive >= 0.0)
            || !(self.temperature_spread >= 0.0)
        {
            return bad("noise, consistency and exit drive must be non-negative");
        }
        for p in [
            self.monster_prob,
            self.merchant_prob,
            self.villager_prob,
            self.treasure_prob,
            self.wanderer_prob,
            self.death_prob,
            self.shrine_prob,
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad("probabilities must lie in [0, 1]");
            }
        }
        if self.moves_offered == 0 {
            return bad("at least one movement option must be offered");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentParams {
    pub w_moral: f64,
    pub w_order: f64,
    /// Weight on each motivation's affinity channel, indexed by motivation rank.
    pub motivation_weights: [f64; 4],
    pub consistency_gain: f64,
    pub temperature: f64,
    pub noise_scale: f64,
}

/// Neutral axes map to zero weight, so a neutral agent's choices carry no
/// information about that axis.
pub fn derive_agent_params(profile: Profile, cfg: &SimConfig) -> AgentParams {
    let w_moral = match profile.alignment.moral {
        MoralAxis::Good => cfg.moral_gain,
        MoralAxis::Neutral => 0.0,
        MoralAxis::Evil => -cfg.moral_gain,
    };
    let w_order = match profile.alignment.law {
        LawAxis::Lawful => cfg.order_gain,
        LawAxis::Neutral => 0.0,
        LawAxis::Chaotic => -cfg.order_gain,
    };
    let mut motivation_weights = [0.0; 4];
    motivation_weights[Motivation::Speed.rank()] = cfg.exit_drive;
    motivation_weights[profile.motivation.rank()] += cfg.motivation_gain;
    AgentParams {
        w_moral,
        w_order,
        motivation_weights,
        consistency_gain: cfg.consistency_gain,
        temperature: cfg.temperature,
        noise_scale: cfg.noise_scale,
    }
}

/// Utility of each offered action for an agent whose previous choice fell
/// in `previous`.
pub fn action_utilities<R: Rng + ?Sized>(
    params: &AgentParams,
    previous: Option<Category>,
    available: &[ActionInstance],
    rng: &mut R,
) -> Vec<f64> {
    available
        .iter()
        .map(|a| {
            let mut u = params.w_moral * a.valence + params.w_order * a.order;
            u += a
                .affinity
                .as_array()
                .iter()
                .zip(params.motivation_weights)
                .map(|(aff, w)| aff * w)
                .sum::<f64>();
            if let Some(prev) = previous {
                let same = prev == a.category;
                if params.w_order > 0.0 && same {
                    u += params.consistency_gain * params.w_order;
                } else if params.w_order < 0.0 && !same {
                    u += params.consistency_gain * -params.w_order;
                }
            }
            if params.noise_scale > 0.0 {
                let z: f64 = rng.sample(StandardNormal);
                u += params.noise_scale * z;
            }
            u
        })
        .collect()
}

/// Boltzmann distribution over utilities, computed with max subtraction.
pub fn softmax_policy(utilities: &[f64], temperature: f64) -> Vec<f64> {
    let max = utilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = utilities.iter().map(|u| ((u - max) / temperature).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ActionKind {
    Move([i32; 2]),
    AttackMonster,
    SneakPast,
    HelpMerchant,
    TradeMerchant,
    RobMerchant,
    ThreatenMerchant,
    AidVillager,
    AskDirections,
    MockVillager,
    ExtortVillager,
    TakeTreasure,
    LeaveTreasure,
    DefaceRoom,
    PrayShrine,
    Rest,
    SearchRoom,
}

const DIRECTIONS: [([i32; 2], &str); 4] = [
    ([0, -1], "move_north"),
    ([1, 0], "move_east"),
    ([0, 1], "move_south"),
    ([-1, 0], "move_west"),
];

impl ActionKind {
    fn template(self) -> &'static str {
        use ActionKind::*;
        match self {
            Move(d) => DIRECTIONS.iter().find(|(dd, _)| *dd == d).map(|(_, t)| *t).unwrap(),
            AttackMonster => "attack_monster",
            SneakPast => "sneak_past",
            HelpMerchant => "help_merchant",
            TradeMerchant => "trade_merchant",
            RobMerchant => "rob_merchant",
            ThreatenMerchant => "threaten_merchant",
            AidVillager => "aid_villager",
            AskDirections => "ask_directions",
            MockVillager => "mock_villager",
            ExtortVillager => "extort_villager",
            TakeTreasure => "take_treasure",
            LeaveTreasure => "leave_treasure",
            DefaceRoom => "deface_room",
            PrayShrine => "pray_shrine",
            Rest => "rest",
            SearchRoom => "search_room",
        }
    }

    /// (category, valence, order, affinity) for non-movement actions.
    fn profile(self) -> (Category, f64, f64, [f64; 4]) {
        use ActionKind::*;
        use Category::*;
        match self {
            Move(_) => unreachable!("movement affinities depend on position"),
            AttackMonster => (Combat, 0.3, 0.2, [0.0, 0.2, 0.1, 0.4]),
            SneakPast => (Cautious, 0.0, 0.0, [0.9, 0.3, 0.0, 0.0]),
            HelpMerchant => (Social, 1.0, 0.3, [0.4, 0.0, 0.0, 0.6]),
            TradeMerchant => (Acquisitive, 0.0, 0.8, [0.2, 0.0, 0.0, 0.6]),
            RobMerchant => (Acquisitive, -1.0, -0.8, [0.0, 0.0, 0.0, 0.9]),
            ThreatenMerchant => (Combat, -0.8, -0.5, [0.0, 0.0, 0.0, 0.5]),
            AidVillager => (Social, 1.0, 0.2, [0.4, 0.5, 0.3, 0.0]),
            AskDirections => (Social, 0.0, 0.5, [0.3, 0.8, 0.0, 0.0]),
            MockVillager => (Social, -0.7, -0.4, [0.0, 0.0, 0.0, 0.0]),
            ExtortVillager => (Combat, -1.0, -0.6, [0.0, 0.0, 0.0, 0.6]),
            TakeTreasure => (Acquisitive, -0.1, -0.2, [0.0, 0.0, 0.0, 1.0]),
            LeaveTreasure => (Cautious, 0.4, 0.6, [0.6, 0.0, 0.0, 0.0]),
            DefaceRoom => (Combat, -0.6, -1.0, [0.0, 0.0, 0.1, 0.0]),
            PrayShrine => (Cautious, 0.6, 0.5, [0.6, 0.0, 0.1, 0.0]),
            Rest => (Cautious, 0.0, 0.3, [0.8, 0.0, 0.0, 0.0]),
            SearchRoom => (Exploratory, 0.0, 0.0, [0.1, 0.0, 0.6, 0.3]),
        }
    }
}

struct GameState {
    pos: [i32; 2],
    visited: HashSet<[i32; 2]>,
    entities: Vec<BTreeSet<Entity>>,
}

struct Offer {
    kind: ActionKind,
    action: ActionInstance,
}

fn movement_affinity(dungeon: &Dungeon, state: &GameState, target: [i32; 2]) -> Affinity {
    let known = state.visited.contains(&target);
    let closer = manhattan(target, dungeon.exit) < manhattan(state.pos, dungeon.exit);
    Affinity {
        safety: if known { 0.3 } else { 0.0 },
        speed: if closer { 1.0 } else { 0.0 },
        wanderlust: if !known && target != dungeon.exit { 1.0 } else { 0.0 },
        wealth: if known { 0.0 } else { 0.2 },
    }
}

fn build_offers<R: Rng>(
    dungeon: &Dungeon,
    state: &GameState,
    cfg: &SimConfig,
    bank: &TemplateBank,
    text_seed: u64,
    rng: &mut R,
) -> Result<Vec<Offer>> {
    let make = |kind: ActionKind, affinity: Option<Affinity>, k: u64| -> Result<Offer> {
        let text = bank.render(kind.template(), seed::mix(&[text_seed, 100 + k]))?;
        let action = match kind {
            ActionKind::Move(d) => ActionInstance {
                category: Category::Exploratory,
                valence: 0.0,
                order: 0.0,
                affinity: affinity.unwrap(),
                text,
                move_delta: Some(d),
            },
            _ => {
                let (category, valence, order, aff) = kind.profile();
                ActionInstance {
                    category,
                    valence,
                    order,
                    affinity: Affinity::from_array(aff),
                    text,
                    move_delta: None,
                }
            }
        };
        Ok(Offer { kind, action })
    };

    let mut moves: Vec<[i32; 2]> = DIRECTIONS
        .iter()
        .map(|(d, _)| *d)
        .filter(|d| dungeon.contains([state.pos[0] + d[0], state.pos[1] + d[1]]))
        .collect();
    moves.shuffle(rng);
    moves.truncate(cfg.moves_offered.min(4));

    let here = &state.entities[dungeon.index(state.pos)];
    let mut encounter = Vec::new();
    for e in here {
        use ActionKind::*;
        match e {
            Entity::Monster => encounter.extend([AttackMonster, SneakPast]),
            Entity::Merchant => encounter.extend([HelpMerchant, TradeMerchant, RobMerchant, ThreatenMerchant]),
            Entity::Villager => encounter.extend([AidVillager, AskDirections, MockVillager, ExtortVillager]),
            Entity::Treasure => encounter.extend([TakeTreasure, LeaveTreasure]),
            Entity::ExitPortal => {}
        }
    }
    encounter.shuffle(rng);
    let mut generic = vec![ActionKind::Rest, ActionKind::SearchRoom];
    if rng.gen_bool(cfg.shrine_prob) {
        generic.push(ActionKind::PrayShrine);
        generic.push(ActionKind::DefaceRoom);
    }
    generic.shuffle(rng);

    let room_for_others = 6 - moves.len();
    let mut kinds: Vec<ActionKind> = encounter.into_iter().chain(generic).take(room_for_others).collect();
    kinds.extend(moves.iter().map(|&d| ActionKind::Move(d)));
    kinds.shuffle(rng);

    kinds
        .into_iter()
        .enumerate()
        .map(|(k, kind)| {
            let aff = match kind {
                ActionKind::Move(d) => {
                    Some(movement_affinity(dungeon, state, [state.pos[0] + d[0], state.pos[1] + d[1]]))
                }
                _ => None,
            };
            make(kind, aff, k as u64)
        })
        .collect()
}

fn describe_room(
    dungeon: &Dungeon,
    state: &GameState,
    bank: &TemplateBank,
    step: u64,
) -> Result<String> {
    let room = dungeon.room(state.pos);
    let base = seed::mix(&[room.description_seed, step]);
    let mut parts = vec![bank.render("room", base)?];
    for (k, e) in state.entities[dungeon.index(state.pos)].iter().enumerate() {
        let id = match e {
            Entity::Monster => "see_monster",
            Entity::Merchant => "see_merchant",
            Entity::Villager => "see_villager",
            Entity::Treasure => "see_treasure",
            Entity::ExitPortal => "see_portal",
        };
        parts.push(bank.render(id, seed::mix(&[base, k as u64 + 1]))?);
    }
    Ok(parts.join(" "))
}

fn sample_index<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    let r: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if r < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Plays one game. The result depends only on the arguments.
pub fn play_game(profile: Profile, game_seed: u64, cfg: &SimConfig) -> Result<Session> {
    play_game_with_id(0, profile, game_seed, cfg)
}

pub fn play_game_with_id(game_id: u64, profile: Profile, game_seed: u64, cfg: &SimConfig) -> Result<Session> {
    let bank = TemplateBank::default();
    let dungeon = Dungeon::generate(game_seed, cfg)?;
    let mut params = derive_agent_params(profile, cfg);
    let mut rng = seed::rng(&[seed::stream::AGENT, game_seed]);
    if cfg.temperature_spread > 0.0 {
        let z: f64 = rng.sample(rand_distr::StandardNormal);
        params.temperature *= (cfg.temperature_spread * z).exp();
    }
    let mut state = GameState {
        pos: dungeon.start,
        visited: HashSet::from([dungeon.start]),
        entities: dungeon.rooms.iter().map(|r| r.entities.clone()).collect(),
    };
    let mut previous: Option<Category> = None;
    let mut decisions = Vec::new();
    let mut outcome = Outcome::StepLimit;

    for step in 0..cfg.max_steps {
        let text_seed = seed::mix(&[game_seed, step as u64]);
        let room_text = describe_room(&dungeon, &state, &bank, step as u64)?;
        let offers = build_offers(&dungeon, &state, cfg, &bank, text_seed, &mut rng)?;
        let available: Vec<ActionInstance> = offers.iter().map(|o| o.action.clone()).collect();
        let utilities = action_utilities(&params, previous, &available, &mut rng);
        let probs = softmax_policy(&utilities, params.temperature);
        let chosen = sample_index(&probs, &mut rng);
        let kind = offers[chosen].kind;
        let action_text = bank.render(&format!("{}_done", kind.template()), seed::mix(&[text_seed, 1]))?;
        decisions.push(DecisionPoint {
            step: step as u32,
            room: state.pos,
            available,
            chosen,
            room_text,
            action_text,
        });
        previous = Some(offers[chosen].action.category);

        let here = dungeon.index(state.pos);
        let mut ended = None;
        match kind {
            ActionKind::Move(d) => {
                state.pos = [state.pos[0] + d[0], state.pos[1] + d[1]];
                state.visited.insert(state.pos);
                if state.pos == dungeon.exit {
                    ended = Some(Outcome::ExitReached);
                } else if rng.gen_bool(cfg.wanderer_prob) {
                    let who = if rng.gen_bool(0.5) { Entity::Merchant } else { Entity::Villager };
                    let idx = dungeon.index(state.pos);
                    state.entities[idx].insert(who);
                }
            }
            ActionKind::AttackMonster => {
                if rng.gen_bool(cfg.death_prob) {
                    ended = Some(Outcome::Died);
                } else {
                    state.entities[here].remove(&Entity::Monster);
                }
            }
            ActionKind::HelpMerchant
            | ActionKind::TradeMerchant
            | ActionKind::RobMerchant
            | ActionKind::ThreatenMerchant => {
                state.entities[here].remove(&Entity::Merchant);
            }
            ActionKind::AidVillager
            | ActionKind::AskDirections
            | ActionKind::MockVillager
            | ActionKind::ExtortVillager => {
                state.entities[here].remove(&Entity::Villager);
            }
            ActionKind::TakeTreasure | ActionKind::LeaveTreasure => {
                state.entities[here].remove(&Entity::Treasure);
            }
            ActionKind::SearchRoom => {
                if rng.gen_bool(0.25) {
                    state.entities[here].insert(Entity::Treasure);
                }
            }
            ActionKind::SneakPast | ActionKind::DefaceRoom | ActionKind::PrayShrine | ActionKind::Rest => {}
        }
        if let Some(o) = ended {
            outcome = o;
            break;
        }
    }

    Ok(Session { game_id, profile, seed: game_seed, outcome, decisions })
}
