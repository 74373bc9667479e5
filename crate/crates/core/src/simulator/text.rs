//! Template bank for room descriptions, offered actions and action narration.
//!
//! A template is plain text with synonym slots written `{a|b|c}`. Rendering
//! picks one alternative per slot from a stream keyed by the seed and the
//! template id, so the same inputs always give the same string.

use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone)]
pub struct TemplateBank {
    templates: BTreeMap<String, Vec<Segment>>,
}

#[derive(Debug, Clone)]
enum Segment {
    Literal(String),
    Slot(Vec<String>),
}

fn parse_template(src: &str) -> Vec<Segment> {
    let mut out = Vec::new();
    let mut rest = src;
    while let Some(open) = rest.find('{') {
        if open > 0 {
            out.push(Segment::Literal(rest[..open].to_string()));
        }
        let close = rest[open..].find('}').map(|c| open + c).expect("unterminated slot");
        let options = rest[open + 1..close].split('|').map(str::to_string).collect();
        out.push(Segment::Slot(options));
        rest = &rest[close + 1..];
    }
    if !rest.is_empty() {
        out.push(Segment::Literal(rest.to_string()));
    }
    out
}

const DEFAULT_TEMPLATES: &[(&str, &str)] = &[
    ("room", "{You enter|You step into|You arrive in|You stumble into|You push into} a {dim|damp|narrow|vaulted|cold|dusty|cramped} {chamber|hall|corridor|cellar|grotto|crypt}{ lit by torchlight| that smells of moss| thick with smoke| echoing with drips|}."),
    ("see_monster", "{A|A snarling|A hungry|A restless} {goblin|skeleton|giant rat|cave troll|ghoul} {blocks the way|lurks in the shadows|guards the room|paces nearby}."),
    ("see_merchant", "{A travelling|A weary|A nervous|A cheerful} merchant {rests beside a cart|counts coins|sets out wares|mends a pack}."),
    ("see_villager", "{A lost|A frightened|A wounded|A hungry} villager {huddles in the corner|calls out|wanders aimlessly|sits by the wall}."),
    ("see_treasure", "{A chest|A pile of coins|A jeweled idol|A silver chalice} {glints|sits|lies} {in the corner|beneath the rubble|on a pedestal|under a cloth}."),
    ("see_portal", "{A shimmering|A glowing|An ancient} portal {hums|flickers|waits} {nearby|at the far wall|ahead}."),
    ("move_north", "{Go|Head|Walk|Move} north{| through the archway| down the passage}"),
    ("move_south", "{Go|Head|Walk|Move} south{| through the archway| down the passage}"),
    ("move_east", "{Go|Head|Walk|Move} east{| through the archway| down the passage}"),
    ("move_west", "{Go|Head|Walk|Move} west{| through the archway| down the passage}"),
    ("move_north_done", "{You head|You walk|You make your way|You press on} north{.| carefully.| without a sound.| at a brisk pace.}"),
    ("move_south_done", "{You head|You walk|You make your way|You press on} south{.| carefully.| without a sound.| at a brisk pace.}"),
    ("move_east_done", "{You head|You walk|You make your way|You press on} east{.| carefully.| without a sound.| at a brisk pace.}"),
    ("move_west_done", "{You head|You walk|You make your way|You press on} west{.| carefully.| without a sound.| at a brisk pace.}"),
    ("attack_monster", "{Attack|Fight|Charge} the monster"),
    ("attack_monster_done", "You {strike|attack|battle|charge} the {beast|creature|monster}{.| with your blade.| without mercy.}"),
    ("sneak_past", "{Sneak|Creep|Slip} past the monster"),
    ("sneak_past_done", "You {sneak|creep|slip} past the {beast|creature|monster}{.| holding your breath.| in the shadows.}"),
    ("help_merchant", "{Help|Assist|Aid} the merchant{| with the cart| carry the wares}"),
    ("help_merchant_done", "You {help|assist|aid} the merchant{.| with the heavy cart.| to gather the spilled wares.| and refuse payment.}"),
    ("trade_merchant", "{Trade|Barter|Haggle} with the merchant"),
    ("trade_merchant_done", "You {trade|barter|haggle} with the merchant{.| for a fair price.| over supplies.}"),
    ("rob_merchant", "{Rob|Steal from|Pickpocket} the merchant"),
    ("rob_merchant_done", "You {rob|steal from|pickpocket} the merchant{.| while the merchant is distracted.| and run.}"),
    ("threaten_merchant", "{Threaten|Intimidate|Menace} the merchant"),
    ("threaten_merchant_done", "You {threaten|intimidate|menace} the merchant{.| with a drawn blade.| until the merchant pays.}"),
    ("aid_villager", "{Aid|Comfort|Heal} the villager"),
    ("aid_villager_done", "You {aid|comfort|heal|bandage} the villager{.| and share your food.| gently.}"),
    ("ask_directions", "{Ask|Question} the villager for {directions|the way out|a map}"),
    ("ask_directions_done", "You {ask|question} the villager {about the exit|for directions|about the way out}."),
    ("mock_villager", "{Mock|Insult|Taunt} the villager"),
    ("mock_villager_done", "You {mock|insult|taunt|jeer at} the villager{.| cruelly.| and laugh.}"),
    ("extort_villager", "{Extort|Shake down|Bully} the villager"),
    ("extort_villager_done", "You {extort|shake down|bully} the villager{.| for every coin.| with threats.}"),
    ("take_treasure", "{Take|Grab|Pocket} the treasure"),
    ("take_treasure_done", "You {take|grab|pocket|scoop up} the {treasure|loot|valuables}{.| greedily.| quickly.}"),
    ("leave_treasure", "{Leave|Respect} the treasure{| for its owner| untouched}"),
    ("leave_treasure_done", "You {leave|respect} the {treasure|valuables} {for its owner|untouched|where it lies}."),
    ("deface_room", "{Smash|Deface|Wreck} the {furniture|statue|shrine}"),
    ("deface_room_done", "You {smash|deface|wreck} the {furniture|statue|shrine|altar}{.| for fun.| noisily.}"),
    ("pray_shrine", "{Pray|Kneel|Leave an offering} at the shrine"),
    ("pray_shrine_done", "You {pray|kneel|leave an offering} at the {shrine|altar}{.| humbly.| in silence.}"),
    ("rest", "{Rest|Catch your breath|Sit down}{| for a moment| by the wall}"),
    ("rest_done", "You {rest|catch your breath|sit quietly}{.| for a moment.| by the wall.}"),
    ("search_room", "{Search|Inspect|Examine} the room"),
    ("search_room_done", "You {search|inspect|examine} the {room|walls|floor}{.| carefully.| for hidden things.}"),
];

impl Default for TemplateBank {
    fn default() -> Self {
        Self {
            templates: DEFAULT_TEMPLATES
                .iter()
                .map(|(id, src)| (id.to_string(), parse_template(src)))
                .collect(),
        }
    }
}

impl TemplateBank {
    pub fn contains(&self, template_id: &str) -> bool {
        self.templates.contains_key(template_id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(String::as_str)
    }

    /// Number of distinct strings the template can produce.
    pub fn variant_count(&self, template_id: &str) -> Result<usize> {
        let segs = self
            .templates
            .get(template_id)
            .ok_or_else(|| Error::UnknownTemplate(template_id.to_string()))?;
        Ok(segs
            .iter()
            .map(|s| match s {
                Segment::Literal(_) => 1,
                Segment::Slot(o) => o.len(),
            })
            .product())
    }

    pub fn render(&self, template_id: &str, seed: u64) -> Result<String> {
        let segs = self
            .templates
            .get(template_id)
            .ok_or_else(|| Error::UnknownTemplate(template_id.to_string()))?;
        let mut rng = seed::rng(&[seed::stream::TEXT, seed, fnv1a64(template_id.as_bytes())]);
        let mut out = String::new();
        for seg in segs {
            match seg {
                Segment::Literal(s) => out.push_str(s),
                Segment::Slot(options) => out.push_str(&options[rng.gen_range(0..options.len())]),
            }
        }
        Ok(out)
    }
}

pub fn render_text(bank: &TemplateBank, template_id: &str, seed: u64) -> Result<String> {
    bank.render(template_id, seed)
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
