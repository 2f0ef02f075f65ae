//! Card-group classification, the beats relation and legal-action enumeration.
//!
//! Wild cards (the Heart of the round's level rank) may stand in for any
//! non-joker card of a combination. A wild played alone is simply a level-card
//! single, and a same-rank group made only of wilds is read as level cards.
//! Same-rank groups (Single, Pair, Triple, FullHouse, Bomb) are keyed by the
//! level-aware order; sequences use their natural start position with the Ace
//! allowed below the 2.

mod classify;
mod generate;

use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cards::{rank_at_sequence_position, single_order, Card, CardError, CardMultiset, Level, Rank, Suit};

pub use classify::classify;
pub use generate::{enumerate_groups, legal_actions, wild_flags, WildFlags, NUM_WILD_FLAGS};

pub const MAX_GROUP_SIZE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GroupType {
    Single,
    Pair,
    Triple,
    Tube,
    Plate,
    FullHouse,
    Straight,
    /// Four to ten cards of one rank.
    Bomb(u8),
    StraightFlush,
    JokerBomb,
    Pass,
}

impl GroupType {
    pub fn is_bomb_class(self) -> bool {
        matches!(self, GroupType::Bomb(_) | GroupType::StraightFlush | GroupType::JokerBomb)
    }

    pub fn is_sequence(self) -> bool {
        matches!(self, GroupType::Tube | GroupType::Plate | GroupType::Straight | GroupType::StraightFlush)
    }

    /// Bomb strength tier: 4- and 5-card bombs < straight flush < 6+ card bombs < joker bomb.
    fn bomb_tier(self) -> Option<u8> {
        match self {
            GroupType::Bomb(n) => Some(2 * n),
            GroupType::StraightFlush => Some(11),
            GroupType::JokerBomb => Some(u8::MAX),
            _ => None,
        }
    }

    fn name(self) -> String {
        match self {
            GroupType::Single => "SINGLE".into(),
            GroupType::Pair => "PAIR".into(),
            GroupType::Triple => "TRIPLE".into(),
            GroupType::Tube => "TUBE".into(),
            GroupType::Plate => "PLATE".into(),
            GroupType::FullHouse => "FULLHOUSE".into(),
            GroupType::Straight => "STRAIGHT".into(),
            GroupType::Bomb(n) => format!("BOMB{n}"),
            GroupType::StraightFlush => "STRAIGHTFLUSH".into(),
            GroupType::JokerBomb => "JOKERBOMB".into(),
            GroupType::Pass => "PASS".into(),
        }
    }

    fn from_name(s: &str) -> Option<GroupType> {
        Some(match s {
            "SINGLE" => GroupType::Single,
            "PAIR" => GroupType::Pair,
            "TRIPLE" => GroupType::Triple,
            "TUBE" => GroupType::Tube,
            "PLATE" => GroupType::Plate,
            "FULLHOUSE" => GroupType::FullHouse,
            "STRAIGHT" => GroupType::Straight,
            "STRAIGHTFLUSH" => GroupType::StraightFlush,
            "JOKERBOMB" => GroupType::JokerBomb,
            "PASS" => GroupType::Pass,
            other => {
                let n: u8 = other.strip_prefix("BOMB")?.parse().ok()?;
                if !(4..=10).contains(&n) {
                    return None;
                }
                GroupType::Bomb(n)
            }
        })
    }
}

impl fmt::Display for GroupType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// A classified playable combination.
///
/// Identity (equality and hashing) is the triple `(kind, key, cards)`; the
/// wild bookkeeping is derived canonically from it.
#[derive(Clone, Copy)]
pub struct CardGroup {
    kind: GroupType,
    rank: Rank,
    key: u8,
    cards: CardMultiset,
    wilds_used: u8,
    wild_as: [Option<Card>; 2],
}

impl PartialEq for CardGroup {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.key == other.key && self.cards == other.cards
    }
}

impl Eq for CardGroup {}

impl Hash for CardGroup {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.kind.hash(state);
        self.key.hash(state);
        self.cards.hash(state);
    }
}

impl CardGroup {
    pub const PASS: CardGroup =
        CardGroup { kind: GroupType::Pass, rank: Rank::Two, key: 0, cards: CardMultiset::new(), wilds_used: 0, wild_as: [None, None] };

    #[inline]
    pub fn kind(&self) -> GroupType {
        self.kind
    }

    /// Comparison key within the group's type.
    #[inline]
    pub fn key(&self) -> u8 {
        self.key
    }

    /// Rank the group is named by: the repeated rank, the full house's triple,
    /// or the lowest rank of a sequence (Ace for an Ace-low sequence).
    #[inline]
    pub fn rank(&self) -> Rank {
        self.rank
    }

    #[inline]
    pub fn cards(&self) -> &CardMultiset {
        &self.cards
    }

    #[inline]
    pub fn is_pass(&self) -> bool {
        self.kind == GroupType::Pass
    }

    #[inline]
    pub fn wilds_used(&self) -> u8 {
        self.wilds_used
    }

    /// The cards each substituting wild stands for.
    pub fn wild_assignment(&self) -> impl Iterator<Item = Card> + '_ {
        self.wild_as.iter().flatten().copied()
    }

    /// Build a group from an already validated interpretation, deriving the
    /// minimal wild substitution. `rank` is the group rank as in [`CardGroup::rank`];
    /// for sequences `start` is the start position (1..=13).
    pub(crate) fn from_parts(kind: GroupType, rank: Rank, start: u8, cards: CardMultiset, level: Level) -> CardGroup {
        let key = match kind {
            GroupType::Single | GroupType::Pair | GroupType::Triple | GroupType::FullHouse | GroupType::Bomb(_) => {
                single_order(rank, level)
            }
            GroupType::Tube | GroupType::Plate | GroupType::Straight | GroupType::StraightFlush => start,
            GroupType::JokerBomb | GroupType::Pass => 0,
        };
        let (wilds_used, wild_as) = resolve_wilds(kind, rank, start, &cards, level);
        CardGroup { kind, rank, key, cards, wilds_used, wild_as }
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }

    /// Parse the group notation (`"BOMB4[7]: H7 S7 D7 C7"`, `"PASS"`).
    pub fn parse(text: &str, level: Level) -> Result<CardGroup, GroupParseError> {
        let text = text.trim();
        if text == "PASS" {
            return Ok(CardGroup::PASS);
        }
        let (head, cards) = text.split_once(':').ok_or_else(|| GroupParseError::Syntax(text.into()))?;
        let cards: CardMultiset = cards.parse()?;
        let head = head.trim();
        let (name, rank) = match head.split_once('[') {
            Some((name, rest)) => {
                let rank_text = rest.strip_suffix(']').ok_or_else(|| GroupParseError::Syntax(text.into()))?;
                let rank = match rank_text {
                    "BJ" => Rank::BlackJoker,
                    "RJ" => Rank::RedJoker,
                    r => r.parse::<Level>()?.rank(),
                };
                (name, Some(rank))
            }
            None => (head, None),
        };
        let kind = GroupType::from_name(name).ok_or_else(|| GroupParseError::Syntax(text.into()))?;
        classify(&cards, level)
            .into_iter()
            .find(|g| g.kind == kind && rank.is_none_or(|r| r == g.rank))
            .ok_or_else(|| GroupParseError::NotAGroup(text.into()))
    }
}

impl fmt::Display for CardGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            GroupType::Pass => f.write_str("PASS"),
            GroupType::JokerBomb => write!(f, "JOKERBOMB: {}", self.cards),
            k => write!(f, "{k}[{}]: {}", self.rank, self.cards),
        }
    }
}

impl fmt::Debug for CardGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self} (key {}, wilds {})", self.key, self.wilds_used)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupParseError {
    #[error("malformed group `{0}`")]
    Syntax(String),
    #[error("`{0}` is not a playable group")]
    NotAGroup(String),
    #[error(transparent)]
    Card(#[from] CardError),
}

/// Whether `a` may be played over `b`. Pass never beats and is never beaten.
pub fn beats(a: &CardGroup, b: &CardGroup, _level: Level) -> bool {
    if a.is_pass() || b.is_pass() {
        return false;
    }
    match (a.kind.bomb_tier(), b.kind.bomb_tier()) {
        (Some(ta), Some(tb)) => ta > tb || (ta == tb && a.key > b.key),
        (Some(_), None) => true,
        (None, Some(_)) => false,
        (None, None) => a.kind == b.kind && a.key > b.key,
    }
}

/// Minimal wild usage for a validated interpretation: fill every slot with
/// natural cards first (a Heart level card is natural in its own slot), the
/// leftover wilds are substitutes.
fn resolve_wilds(kind: GroupType, rank: Rank, start: u8, cards: &CardMultiset, level: Level) -> (u8, [Option<Card>; 2]) {
    let wild = level.wild_card();
    let mut left = *cards;
    let mut wild_as = [None, None];
    let mut used = 0u8;

    let mut fill = |left: &mut CardMultiset, rank: Rank, need: u8, suit: Option<Suit>| {
        let mut taken = 0u8;
        let mut candidates = [None; 4];
        match (rank.is_joker(), suit) {
            (true, _) => candidates[0] = Card::joker(rank),
            (false, Some(s)) => candidates[0] = Some(Card::plain(rank, s)),
            (false, None) => {
                for (slot, &s) in candidates.iter_mut().zip(Suit::ALL.iter()) {
                    *slot = Some(Card::plain(rank, s));
                }
            }
        }
        // Non-wild naturals first, then the wild as its own rank.
        for wild_pass in [false, true] {
            for c in candidates.iter().flatten().copied() {
                if (c == wild) != wild_pass {
                    continue;
                }
                while taken < need && left.count(c) > 0 {
                    left.remove(c);
                    taken += 1;
                }
            }
        }
        for _ in taken..need {
            if let Some(slot) = wild_as.get_mut(used as usize) {
                *slot = Card::new(rank, suit.unwrap_or(Suit::Heart)).ok();
            }
            used += 1;
        }
    };

    match kind {
        GroupType::Pass | GroupType::JokerBomb | GroupType::Single => return (0, [None, None]),
        GroupType::Pair => fill(&mut left, rank, 2, None),
        GroupType::Triple => fill(&mut left, rank, 3, None),
        GroupType::Bomb(n) => fill(&mut left, rank, n, None),
        GroupType::FullHouse => {
            fill(&mut left, rank, 3, None);
            let pair_rank = left.iter().find(|&c| c != wild).map_or(level.rank(), |c| c.rank());
            fill(&mut left, pair_rank, 2, None);
        }
        GroupType::Straight | GroupType::StraightFlush | GroupType::Tube | GroupType::Plate => {
            let (len, need) = match kind {
                GroupType::Tube => (3, 2),
                GroupType::Plate => (2, 3),
                _ => (5, 1),
            };
            let suit = if kind == GroupType::StraightFlush {
                Some(cards.iter().find(|&c| c != wild).and_then(Card::suit).unwrap_or(Suit::Heart))
            } else {
                None
            };
            for pos in start..start + len {
                fill(&mut left, rank_at_sequence_position(pos), need, suit);
            }
        }
    }
    debug_assert_eq!(left.len(), used as usize, "unfilled cards {left} for {kind} with {cards}");
    debug_assert!(left.iter().all(|c| c == wild));
    (used, wild_as)
}
