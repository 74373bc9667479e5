//! The 36-profile label space: nine alignments crossed with four motivations,
//! the neutral/non-neutral partition, and the reduced label spaces used by
//! the complexity-reduction experiments.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LawAxis {
    Lawful,
    Neutral,
    Chaotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MoralAxis {
    Good,
    Neutral,
    Evil,
}

impl LawAxis {
    pub const ALL: [LawAxis; 3] = [LawAxis::Lawful, LawAxis::Neutral, LawAxis::Chaotic];

    pub fn rank(self) -> usize {
        self as usize
    }

    fn code(self) -> char {
        match self {
            LawAxis::Lawful => 'L',
            LawAxis::Neutral => 'N',
            LawAxis::Chaotic => 'C',
        }
    }
}

impl MoralAxis {
    pub const ALL: [MoralAxis; 3] = [MoralAxis::Good, MoralAxis::Neutral, MoralAxis::Evil];

    pub fn rank(self) -> usize {
        self as usize
    }

    fn code(self) -> char {
        match self {
            MoralAxis::Good => 'G',
            MoralAxis::Neutral => 'N',
            MoralAxis::Evil => 'E',
        }
    }
}

/// One of the nine alignments, ordered law-axis major, moral-axis minor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Alignment {
    pub law: LawAxis,
    pub moral: MoralAxis,
}

impl Alignment {
    pub const COUNT: usize = 9;

    pub fn new(law: LawAxis, moral: MoralAxis) -> Self {
        Self { law, moral }
    }

    pub fn rank(self) -> usize {
        3 * self.law.rank() + self.moral.rank()
    }

    pub fn from_rank(rank: usize) -> Option<Self> {
        if rank >= Self::COUNT {
            return None;
        }
        Some(Self::new(LawAxis::ALL[rank / 3], MoralAxis::ALL[rank % 3]))
    }

    pub fn all() -> impl Iterator<Item = Alignment> {
        (0..Self::COUNT).map(|r| Self::from_rank(r).unwrap())
    }

    /// Neutral on either axis. Five of the nine alignments qualify.
    pub fn is_neutral(self) -> bool {
        self.law == LawAxis::Neutral || self.moral == MoralAxis::Neutral
    }

    /// Two-letter code; True Neutral is "TN".
    pub fn code(self) -> String {
        if self.law == LawAxis::Neutral && self.moral == MoralAxis::Neutral {
            "TN".to_string()
        } else {
            format!("{}{}", self.law.code(), self.moral.code())
        }
    }

    pub fn parse_code(code: &str) -> Option<Self> {
        if code == "TN" {
            return Some(Self::new(LawAxis::Neutral, MoralAxis::Neutral));
        }
        let mut chars = code.chars();
        let law = match chars.next()? {
            'L' => LawAxis::Lawful,
            'N' => LawAxis::Neutral,
            'C' => LawAxis::Chaotic,
            _ => return None,
        };
        let moral = match chars.next()? {
            'G' => MoralAxis::Good,
            'N' => MoralAxis::Neutral,
            'E' => MoralAxis::Evil,
            _ => return None,
        };
        if chars.next().is_some() {
            return None;
        }
        let a = Self::new(law, moral);
        // "NN" is not an accepted spelling of True Neutral.
        if a.law == LawAxis::Neutral && a.moral == MoralAxis::Neutral {
            return None;
        }
        Some(a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Motivation {
    Safety,
    Speed,
    Wanderlust,
    Wealth,
}

impl Motivation {
    pub const COUNT: usize = 4;
    pub const ALL: [Motivation; 4] = [
        Motivation::Safety,
        Motivation::Speed,
        Motivation::Wanderlust,
        Motivation::Wealth,
    ];

    pub fn rank(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Motivation::Safety => "Safety",
            Motivation::Speed => "Speed",
            Motivation::Wanderlust => "Wanderlust",
            Motivation::Wealth => "Wealth",
        }
    }

    pub fn parse_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }
}

/// An alignment × motivation pair with its canonical index in `0..36`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Profile {
    pub alignment: Alignment,
    pub motivation: Motivation,
}

pub const PROFILE_COUNT: usize = 36;

pub fn profile_index(alignment: Alignment, motivation: Motivation) -> usize {
    4 * alignment.rank() + motivation.rank()
}

impl Profile {
    pub fn new(alignment: Alignment, motivation: Motivation) -> Self {
        Self { alignment, motivation }
    }

    pub fn index(self) -> usize {
        profile_index(self.alignment, self.motivation)
    }

    pub fn from_index(index: usize) -> Option<Self> {
        if index >= PROFILE_COUNT {
            return None;
        }
        Some(Self::new(
            Alignment::from_rank(index / 4)?,
            Motivation::ALL[index % 4],
        ))
    }

    pub fn all() -> impl Iterator<Item = Profile> {
        (0..PROFILE_COUNT).map(|i| Self::from_index(i).unwrap())
    }

    pub fn is_neutral(self) -> bool {
        self.alignment.is_neutral()
    }

    pub fn code(self) -> String {
        format!("{}-{}", self.alignment.code(), self.motivation.name())
    }
}

pub fn is_neutral_profile(profile: Profile) -> bool {
    profile.is_neutral()
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code())
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::ParseProfile(s.to_string());
        let (a, m) = s.split_once('-').ok_or_else(bad)?;
        let alignment = Alignment::parse_code(a).ok_or_else(bad)?;
        let motivation = Motivation::parse_name(m).ok_or_else(bad)?;
        Ok(Profile::new(alignment, motivation))
    }
}

impl Serialize for Profile {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.code())
    }
}

impl<'de> Deserialize<'de> for Profile {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Label spaces a classifier head can be trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LabelSpace {
    Profile36,
    Alignment9,
    Motivation4,
    BinaryLawful2,
    LawAxis3,
    NonNeutralProfile16,
    NeutralProfile20,
}

impl LabelSpace {
    pub const ALL: [LabelSpace; 7] = [
        LabelSpace::Profile36,
        LabelSpace::Alignment9,
        LabelSpace::Motivation4,
        LabelSpace::BinaryLawful2,
        LabelSpace::LawAxis3,
        LabelSpace::NonNeutralProfile16,
        LabelSpace::NeutralProfile20,
    ];

    pub fn cardinality(self) -> usize {
        match self {
            LabelSpace::Profile36 => 36,
            LabelSpace::Alignment9 => 9,
            LabelSpace::Motivation4 => 4,
            LabelSpace::BinaryLawful2 => 2,
            LabelSpace::LawAxis3 => 3,
            LabelSpace::NonNeutralProfile16 => 16,
            LabelSpace::NeutralProfile20 => 20,
        }
    }

    /// Stable one-byte tag used in binary file headers.
    pub fn tag(self) -> u8 {
        Self::ALL.iter().position(|&s| s == self).unwrap() as u8
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.get(tag as usize).copied()
    }

    pub fn short_name(self) -> &'static str {
        match self {
            LabelSpace::Profile36 => "profile36",
            LabelSpace::Alignment9 => "alignment9",
            LabelSpace::Motivation4 => "motivation4",
            LabelSpace::BinaryLawful2 => "lawful2",
            LabelSpace::LawAxis3 => "lawaxis3",
            LabelSpace::NonNeutralProfile16 => "nonneutral16",
            LabelSpace::NeutralProfile20 => "neutral20",
        }
    }

    /// Whether `profile` can be mapped into this space.
    pub fn admits(self, profile: Profile) -> bool {
        match self {
            LabelSpace::NonNeutralProfile16 => !profile.is_neutral(),
            LabelSpace::NeutralProfile20 => profile.is_neutral(),
            _ => true,
        }
    }

    /// Profiles admitted by this space, in canonical order.
    pub fn admitted_profiles(self) -> Vec<Profile> {
        Profile::all().filter(|&p| self.admits(p)).collect()
    }

    /// Human-readable label names, indexed by class.
    pub fn label_names(self) -> Vec<String> {
        match self {
            LabelSpace::Profile36 | LabelSpace::NonNeutralProfile16 | LabelSpace::NeutralProfile20 => {
                self.admitted_profiles().into_iter().map(|p| p.code()).collect()
            }
            LabelSpace::Alignment9 => Alignment::all().map(|a| a.code()).collect(),
            LabelSpace::Motivation4 => Motivation::ALL.iter().map(|m| m.name().to_string()).collect(),
            LabelSpace::BinaryLawful2 => vec!["Lawful".into(), "NonLawful".into()],
            LabelSpace::LawAxis3 => vec!["Lawful".into(), "Neutral".into(), "Chaotic".into()],
        }
    }
}

pub fn map_label(profile: Profile, space: LabelSpace) -> Result<usize> {
    Ok(match space {
        LabelSpace::Profile36 => profile.index(),
        LabelSpace::Alignment9 => profile.alignment.rank(),
        LabelSpace::Motivation4 => profile.motivation.rank(),
        LabelSpace::BinaryLawful2 => usize::from(profile.alignment.law != LawAxis::Lawful),
        LabelSpace::LawAxis3 => profile.alignment.law.rank(),
        LabelSpace::NonNeutralProfile16 | LabelSpace::NeutralProfile20 => {
            if !space.admits(profile) {
                return Err(Error::SubsetMismatch { profile: profile.code(), space });
            }
            Profile::all()
                .filter(|&p| space.admits(p))
                .position(|p| p == profile)
                .expect("admitted profile is enumerated")
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(code: &str) -> Profile {
        code.parse().unwrap()
    }

    #[test]
    fn index_endpoints_and_roundtrip() {
        assert_eq!(profile_index(Alignment::new(LawAxis::Lawful, MoralAxis::Good), Motivation::Safety), 0);
        assert_eq!(profile_index(Alignment::new(LawAxis::Chaotic, MoralAxis::Evil), Motivation::Wealth), 35);
        for i in 0..PROFILE_COUNT {
            let prof = Profile::from_index(i).unwrap();
            assert_eq!(prof.index(), i);
            assert_eq!(profile_index(prof.alignment, prof.motivation), i);
        }
        assert!(Profile::from_index(36).is_none());
    }

    #[test]
    fn neutral_partition_is_20_16() {
        let neutral = Profile::all().filter(|&p| is_neutral_profile(p)).count();
        assert_eq!(neutral, 20);
        assert_eq!(PROFILE_COUNT - neutral, 16);
        assert!(is_neutral_profile(p("TN-Wealth")));
        assert!(!is_neutral_profile(p("LG-Speed")));
        assert!(is_neutral_profile(p("NG-Safety")));
    }

    #[test]
    fn label_maps() {
        assert_eq!(map_label(p("LE-Speed"), LabelSpace::BinaryLawful2).unwrap(), 0);
        assert_eq!(map_label(p("NE-Speed"), LabelSpace::BinaryLawful2).unwrap(), 1);
        assert_eq!(map_label(p("CG-Safety"), LabelSpace::LawAxis3).unwrap(), 2);
        assert!(matches!(
            map_label(p("TN-Safety"), LabelSpace::NonNeutralProfile16),
            Err(Error::SubsetMismatch { .. })
        ));
        assert_eq!(map_label(p("LG-Safety"), LabelSpace::NonNeutralProfile16).unwrap(), 0);
        assert_eq!(map_label(p("CE-Wealth"), LabelSpace::NonNeutralProfile16).unwrap(), 15);
        assert_eq!(map_label(p("LN-Safety"), LabelSpace::NeutralProfile20).unwrap(), 0);
    }

    #[test]
    fn label_maps_are_surjective() {
        for space in LabelSpace::ALL {
            let mut hit = vec![false; space.cardinality()];
            for prof in space.admitted_profiles() {
                hit[map_label(prof, space).unwrap()] = true;
            }
            assert!(hit.iter().all(|&h| h), "{space:?}");
            assert_eq!(space.label_names().len(), space.cardinality());
        }
    }

    #[test]
    fn subset_reindex_preserves_canonical_order() {
        for space in [LabelSpace::NonNeutralProfile16, LabelSpace::NeutralProfile20] {
            let idx: Vec<usize> = space
                .admitted_profiles()
                .into_iter()
                .map(|p| map_label(p, space).unwrap())
                .collect();
            assert_eq!(idx, (0..space.cardinality()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn code_parsing() {
        for prof in Profile::all() {
            assert_eq!(prof.code().parse::<Profile>().unwrap(), prof);
        }
        assert_eq!(p("TN-Speed").alignment, Alignment::new(LawAxis::Neutral, MoralAxis::Neutral));
        for bad in ["NN-Speed", "LG-speed", "LG", "XG-Safety", "LGX-Safety", "LG-Safety-"] {
            assert!(bad.parse::<Profile>().is_err(), "{bad}");
        }
        let json = serde_json::to_string(&p("CE-Wealth")).unwrap();
        assert_eq!(json, "\"CE-Wealth\"");
        assert_eq!(serde_json::from_str::<Profile>(&json).unwrap(), p("CE-Wealth"));
    }

    #[test]
    fn tags_roundtrip() {
        for space in LabelSpace::ALL {
            assert_eq!(LabelSpace::from_tag(space.tag()), Some(space));
        }
    }
}
