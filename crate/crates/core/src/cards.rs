//! Card identities, multisets over the 54 distinct cards of a double deck,
//! and the level-aware rank orderings.
//!
//! The 54-slot layout is rank-major, suit-minor with the jokers last:
//! `index = 4 * rank_ordinal + suit_ordinal` for the ranks 2..A (ordinal 0..12)
//! and suits H, S, D, C (ordinal 0..3); the Black Joker is 52, the Red Joker 53.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub const NUM_CARDS: usize = 54;
pub const NUM_RANKS: usize = 15;
pub const NUM_PLAIN_RANKS: usize = 13;
pub const DECK_SIZE: usize = 108;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CardError {
    #[error("invalid card code `{0}`")]
    BadCode(String),
    #[error("card index {0} out of range")]
    BadIndex(usize),
    #[error("jokers cannot be a level")]
    JokerLevel,
    #[error("jokers never form sequences")]
    JokerSequence,
    #[error("more than two copies of {0}")]
    TooManyCopies(Card),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Rank {
    Two = 0,
    Three,
    Four,
    Five,
    Six,
    Seven,
    Eight,
    Nine,
    Ten,
    Jack,
    Queen,
    King,
    Ace,
    BlackJoker,
    RedJoker,
}

impl Rank {
    pub const ALL: [Rank; NUM_RANKS] = [
        Rank::Two,
        Rank::Three,
        Rank::Four,
        Rank::Five,
        Rank::Six,
        Rank::Seven,
        Rank::Eight,
        Rank::Nine,
        Rank::Ten,
        Rank::Jack,
        Rank::Queen,
        Rank::King,
        Rank::Ace,
        Rank::BlackJoker,
        Rank::RedJoker,
    ];

    /// Natural ordinal: 2 -> 0, ..., A -> 12, BJ -> 13, RJ -> 14.
    #[inline]
    pub fn ordinal(self) -> u8 {
        self as u8
    }

    pub fn from_ordinal(ordinal: u8) -> Option<Rank> {
        Rank::ALL.get(ordinal as usize).copied()
    }

    #[inline]
    pub fn is_joker(self) -> bool {
        matches!(self, Rank::BlackJoker | Rank::RedJoker)
    }

    /// Face value used by the tribute return rule (2..=10 are "point ≤ 10").
    pub fn point(self) -> u8 {
        self.ordinal() + 2
    }

    fn symbol(self) -> char {
        match self {
            Rank::Ten => 'T',
            Rank::Jack => 'J',
            Rank::Queen => 'Q',
            Rank::King => 'K',
            Rank::Ace => 'A',
            Rank::BlackJoker | Rank::RedJoker => '*',
            r => (b'2' + r.ordinal()) as char,
        }
    }

    fn from_symbol(c: char) -> Option<Rank> {
        Some(match c {
            '2'..='9' => Rank::from_ordinal(c as u8 - b'2')?,
            'T' => Rank::Ten,
            'J' => Rank::Jack,
            'Q' => Rank::Queen,
            'K' => Rank::King,
            'A' => Rank::Ace,
            _ => return None,
        })
    }
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rank::BlackJoker => f.write_str("BJ"),
            Rank::RedJoker => f.write_str("RJ"),
            r => write!(f, "{}", r.symbol()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Suit {
    Heart = 0,
    Spade,
    Diamond,
    Club,
}

impl Suit {
    pub const ALL: [Suit; 4] = [Suit::Heart, Suit::Spade, Suit::Diamond, Suit::Club];

    #[inline]
    pub fn ordinal(self) -> u8 {
        self as u8
    }

    pub fn symbol(self) -> char {
        match self {
            Suit::Heart => 'H',
            Suit::Spade => 'S',
            Suit::Diamond => 'D',
            Suit::Club => 'C',
        }
    }

    fn from_symbol(c: char) -> Option<Suit> {
        Some(match c {
            'H' => Suit::Heart,
            'S' => Suit::Spade,
            'D' => Suit::Diamond,
            'C' => Suit::Club,
            _ => return None,
        })
    }
}

/// One of the 54 distinct cards, stored as its encoding index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Card(u8);

impl Card {
    pub const BLACK_JOKER: Card = Card(52);
    pub const RED_JOKER: Card = Card(53);

    pub fn new(rank: Rank, suit: Suit) -> Result<Card, CardError> {
        match rank {
            Rank::BlackJoker | Rank::RedJoker => Err(CardError::BadCode(format!("{rank}{}", suit.symbol()))),
            _ => Ok(Card(rank.ordinal() * 4 + suit.ordinal())),
        }
    }

    /// Plain (non-joker) card. Panics on a joker rank.
    pub fn plain(rank: Rank, suit: Suit) -> Card {
        Card::new(rank, suit).expect("plain card requires a non-joker rank")
    }

    pub fn joker(rank: Rank) -> Option<Card> {
        match rank {
            Rank::BlackJoker => Some(Card::BLACK_JOKER),
            Rank::RedJoker => Some(Card::RED_JOKER),
            _ => None,
        }
    }

    pub fn from_index(index: usize) -> Result<Card, CardError> {
        if index < NUM_CARDS {
            Ok(Card(index as u8))
        } else {
            Err(CardError::BadIndex(index))
        }
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn rank(self) -> Rank {
        match self.0 {
            52 => Rank::BlackJoker,
            53 => Rank::RedJoker,
            i => Rank::ALL[(i / 4) as usize],
        }
    }

    #[inline]
    pub fn suit(self) -> Option<Suit> {
        if self.0 >= 52 {
            None
        } else {
            Some(Suit::ALL[(self.0 % 4) as usize])
        }
    }

    /// Heart-suited card of the round's level rank.
    #[inline]
    pub fn is_wild(self, level: Level) -> bool {
        self == level.wild_card()
    }

    pub fn all() -> impl Iterator<Item = Card> {
        (0..NUM_CARDS as u8).map(Card)
    }
}

pub fn card_index(card: Card) -> usize {
    card.index()
}

impl fmt::Display for Card {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.suit() {
            None => write!(f, "{}", self.rank()),
            Some(s) => write!(f, "{}{}", s.symbol(), self.rank().symbol()),
        }
    }
}

impl FromStr for Card {
    type Err = CardError;

    fn from_str(s: &str) -> Result<Card, CardError> {
        let bad = || CardError::BadCode(s.to_string());
        match s {
            "BJ" => return Ok(Card::BLACK_JOKER),
            "RJ" => return Ok(Card::RED_JOKER),
            _ => {}
        }
        let mut chars = s.chars();
        let (Some(sc), Some(rc), None) = (chars.next(), chars.next(), chars.next()) else {
            return Err(bad());
        };
        let suit = Suit::from_symbol(sc).ok_or_else(bad)?;
        let rank = Rank::from_symbol(rc).ok_or_else(bad)?;
        Card::new(rank, suit)
    }
}

impl Serialize for Card {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Card {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The level of a team or round: a plain rank 2..A.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Level(Rank);

impl Level {
    pub const TWO: Level = Level(Rank::Two);
    pub const ACE: Level = Level(Rank::Ace);

    pub fn new(rank: Rank) -> Result<Level, CardError> {
        if rank.is_joker() {
            Err(CardError::JokerLevel)
        } else {
            Ok(Level(rank))
        }
    }

    pub fn from_ordinal(ordinal: u8) -> Option<Level> {
        (ordinal < NUM_PLAIN_RANKS as u8).then(|| Level(Rank::ALL[ordinal as usize]))
    }

    #[inline]
    pub fn rank(self) -> Rank {
        self.0
    }

    /// 0 for level 2 up to 12 for level A.
    #[inline]
    pub fn ordinal(self) -> u8 {
        self.0.ordinal()
    }

    pub fn is_ace(self) -> bool {
        self.0 == Rank::Ace
    }

    /// Raise by `steps`, never past A.
    pub fn promoted(self, steps: u8) -> Level {
        let target = (self.ordinal() + steps).min(Rank::Ace.ordinal());
        Level(Rank::ALL[target as usize])
    }

    pub fn wild_card(self) -> Card {
        Card::plain(self.0, Suit::Heart)
    }

    pub fn all() -> impl Iterator<Item = Level> {
        Rank::ALL[..NUM_PLAIN_RANKS].iter().map(|&r| Level(r))
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl FromStr for Level {
    type Err = CardError;

    fn from_str(s: &str) -> Result<Level, CardError> {
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => Rank::from_symbol(c).map(Level).ok_or_else(|| CardError::BadCode(s.into())),
            _ if s == "10" => Ok(Level(Rank::Ten)),
            _ => Err(CardError::BadCode(s.into())),
        }
    }
}

impl Serialize for Level {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Level {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Ordinal of a rank played as a single card: RJ > BJ > level rank > A > ... > 2.
/// The level rank leaves its natural slot, so the result is not contiguous.
#[inline]
pub fn single_order(rank: Rank, level: Level) -> u8 {
    match rank {
        Rank::RedJoker => 15,
        Rank::BlackJoker => 14,
        r if r == level.rank() => 13,
        r => r.ordinal(),
    }
}

/// Candidate positions of a rank inside a sequence (Straight, Tube, Plate,
/// StraightFlush). The Ace may sit below the 2 or above the King.
pub fn sequence_ordinal(rank: Rank) -> Result<&'static [u8], CardError> {
    const ORDS: [[u8; 1]; 12] = [[2], [3], [4], [5], [6], [7], [8], [9], [10], [11], [12], [13]];
    match rank {
        Rank::BlackJoker | Rank::RedJoker => Err(CardError::JokerSequence),
        Rank::Ace => Ok(&[1, 14]),
        r => Ok(&ORDS[r.ordinal() as usize]),
    }
}

/// Rank occupying a sequence position in `1..=14`.
#[inline]
pub fn rank_at_sequence_position(pos: u8) -> Rank {
    debug_assert!((1..=14).contains(&pos));
    if pos == 1 || pos == 14 {
        Rank::Ace
    } else {
        Rank::ALL[(pos - 2) as usize]
    }
}

/// Counts (0..=2) for each of the 54 distinct cards.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CardMultiset {
    counts: [u8; NUM_CARDS],
    len: u8,
}

impl Default for CardMultiset {
    fn default() -> Self {
        CardMultiset::new()
    }
}

impl CardMultiset {
    pub const fn new() -> Self {
        CardMultiset { counts: [0; NUM_CARDS], len: 0 }
    }

    pub fn full_deck() -> Self {
        CardMultiset { counts: [2; NUM_CARDS], len: DECK_SIZE as u8 }
    }

    pub fn from_counts(counts: [u8; NUM_CARDS]) -> Result<Self, CardError> {
        let mut len = 0usize;
        for (i, &c) in counts.iter().enumerate() {
            if c > 2 {
                return Err(CardError::TooManyCopies(Card(i as u8)));
            }
            len += c as usize;
        }
        Ok(CardMultiset { counts, len: len as u8 })
    }

    pub fn from_cards<I: IntoIterator<Item = Card>>(cards: I) -> Result<Self, CardError> {
        let mut set = CardMultiset::new();
        for c in cards {
            set.try_insert(c)?;
        }
        Ok(set)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn count(&self, card: Card) -> u8 {
        self.counts[card.index()]
    }

    #[inline]
    pub fn counts(&self) -> &[u8; NUM_CARDS] {
        &self.counts
    }

    pub fn try_insert(&mut self, card: Card) -> Result<(), CardError> {
        self.try_insert_n(card, 1)
    }

    pub fn try_insert_n(&mut self, card: Card, n: u8) -> Result<(), CardError> {
        let slot = &mut self.counts[card.index()];
        if *slot + n > 2 {
            return Err(CardError::TooManyCopies(card));
        }
        *slot += n;
        self.len += n;
        Ok(())
    }

    /// Insert, panicking if the two-copy limit would be exceeded.
    pub fn insert_n(&mut self, card: Card, n: u8) {
        self.try_insert_n(card, n).expect("card multiset overflow");
    }

    /// Remove one copy; returns false when absent.
    pub fn remove(&mut self, card: Card) -> bool {
        let slot = &mut self.counts[card.index()];
        if *slot == 0 {
            return false;
        }
        *slot -= 1;
        self.len -= 1;
        true
    }

    pub fn is_subset_of(&self, other: &CardMultiset) -> bool {
        self.counts.iter().zip(other.counts.iter()).all(|(a, b)| a <= b)
    }

    /// `self - other`, or `None` when `other` is not contained in `self`.
    pub fn checked_sub(&self, other: &CardMultiset) -> Option<CardMultiset> {
        let mut out = *self;
        for i in 0..NUM_CARDS {
            out.counts[i] = self.counts[i].checked_sub(other.counts[i])?;
        }
        out.len = self.len - other.len;
        Some(out)
    }

    /// `self + other`, or `None` when some card would exceed two copies.
    pub fn checked_add(&self, other: &CardMultiset) -> Option<CardMultiset> {
        let mut out = *self;
        for i in 0..NUM_CARDS {
            let c = self.counts[i] + other.counts[i];
            if c > 2 {
                return None;
            }
            out.counts[i] = c;
        }
        out.len = self.len + other.len;
        Some(out)
    }

    /// Cards in index order, repeated by multiplicity.
    pub fn iter(&self) -> impl Iterator<Item = Card> + '_ {
        self.counts.iter().enumerate().flat_map(|(i, &c)| std::iter::repeat_n(Card(i as u8), c as usize))
    }

    /// Number of cards of `rank` regardless of suit.
    pub fn rank_count(&self, rank: Rank) -> u8 {
        match rank {
            Rank::BlackJoker => self.counts[52],
            Rank::RedJoker => self.counts[53],
            r => {
                let b = r.ordinal() as usize * 4;
                self.counts[b..b + 4].iter().sum()
            }
        }
    }

    /// Per-suit counts of a plain rank, indexed by suit ordinal.
    pub fn suit_counts(&self, rank: Rank) -> [u8; 4] {
        debug_assert!(!rank.is_joker());
        let b = rank.ordinal() as usize * 4;
        [self.counts[b], self.counts[b + 1], self.counts[b + 2], self.counts[b + 3]]
    }

    /// 54-slot count vector.
    pub fn encode54(&self) -> [u8; NUM_CARDS] {
        self.counts
    }
}

pub fn encode54(cards: &CardMultiset) -> [u8; NUM_CARDS] {
    cards.encode54()
}

impl fmt::Display for CardMultiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for c in self.iter() {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for CardMultiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{self}}}")
    }
}

impl FromStr for CardMultiset {
    type Err = CardError;

    fn from_str(s: &str) -> Result<Self, CardError> {
        let cards = s.split_whitespace().map(str::parse).collect::<Result<Vec<Card>, _>>()?;
        CardMultiset::from_cards(cards)
    }
}

impl Serialize for CardMultiset {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CardMultiset {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ms(s: &str) -> CardMultiset {
        s.parse().unwrap()
    }

    #[test]
    fn layout_endpoints() {
        assert_eq!(card_index("H2".parse().unwrap()), 0);
        assert_eq!(card_index(Card::RED_JOKER), 53);
        assert_eq!(card_index(Card::BLACK_JOKER), 52);
        assert_eq!(card_index("CA".parse().unwrap()), 4 * 12 + 3);
    }

    #[test]
    fn card_index_is_a_bijection() {
        let mut seen = [false; NUM_CARDS];
        for rank in Rank::ALL {
            if rank.is_joker() {
                let c = Card::joker(rank).unwrap();
                assert!(!seen[c.index()]);
                seen[c.index()] = true;
                assert_eq!(c.rank(), rank);
                assert_eq!(c.suit(), None);
                continue;
            }
            for suit in Suit::ALL {
                let c = Card::plain(rank, suit);
                assert!(!seen[c.index()]);
                seen[c.index()] = true;
                assert_eq!((c.rank(), c.suit()), (rank, Some(suit)));
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn text_round_trip_for_every_card() {
        for c in Card::all() {
            let text = c.to_string();
            assert_eq!(text.len(), 2);
            assert_eq!(text.parse::<Card>().unwrap(), c);
        }
        assert_eq!("DT".parse::<Card>().unwrap(), Card::plain(Rank::Ten, Suit::Diamond));
        assert!("X5".parse::<Card>().is_err());
        assert!("H1".parse::<Card>().is_err());
        assert!("H55".parse::<Card>().is_err());
    }

    #[test]
    fn encode54_examples() {
        assert_eq!(CardMultiset::new().encode54(), [0; NUM_CARDS]);
        let v = ms("H5 H5").encode54();
        let h5 = card_index("H5".parse().unwrap());
        for (i, &x) in v.iter().enumerate() {
            assert_eq!(x, if i == h5 { 2 } else { 0 });
        }
        let full = CardMultiset::full_deck().encode54();
        assert!(full.iter().all(|&x| x == 2));
        assert_eq!(full.iter().map(|&x| x as usize).sum::<usize>(), 108);
    }

    #[test]
    fn third_copy_is_rejected() {
        assert!(matches!("S3 S3 S3".parse::<CardMultiset>(), Err(CardError::TooManyCopies(_))));
    }

    #[test]
    fn single_order_examples() {
        let five = Level::new(Rank::Five).unwrap();
        assert!(single_order(Rank::RedJoker, five) > single_order(Rank::BlackJoker, five));
        assert!(single_order(Rank::Five, five) > single_order(Rank::Ace, five));
        assert!(single_order(Rank::BlackJoker, five) > single_order(Rank::Five, five));
        let lowest = Rank::ALL.iter().map(|&r| single_order(r, five)).min().unwrap();
        assert_eq!(single_order(Rank::Two, five), lowest);
    }

    #[test]
    fn single_order_is_strict_total_and_levels_differ_only_at_level_ranks() {
        for l1 in Level::all() {
            let ords: Vec<u8> = Rank::ALL.iter().map(|&r| single_order(r, l1)).collect();
            let mut sorted = ords.clone();
            sorted.sort_unstable();
            sorted.dedup();
            assert_eq!(sorted.len(), NUM_RANKS, "ties at level {l1}");
            for l2 in Level::all().filter(|&l| l != l1) {
                // Relative order of every pair not involving L1 or L2 is unchanged.
                for &a in &Rank::ALL {
                    for &b in &Rank::ALL {
                        if [a, b].iter().any(|&r| r == l1.rank() || r == l2.rank()) {
                            continue;
                        }
                        assert_eq!(single_order(a, l1).cmp(&single_order(b, l1)), single_order(a, l2).cmp(&single_order(b, l2)));
                    }
                }
            }
        }
    }

    #[test]
    fn sequence_ordinals() {
        assert_eq!(sequence_ordinal(Rank::Ace).unwrap(), &[1, 14]);
        assert_eq!(sequence_ordinal(Rank::Two).unwrap(), &[2]);
        assert_eq!(sequence_ordinal(Rank::King).unwrap(), &[13]);
        assert_eq!(sequence_ordinal(Rank::BlackJoker), Err(CardError::JokerSequence));
        for pos in 1..=14 {
            assert!(sequence_ordinal(rank_at_sequence_position(pos)).unwrap().contains(&pos));
        }
    }

    #[test]
    fn levels_promote_and_cap() {
        let q = Level::new(Rank::Queen).unwrap();
        assert_eq!(q.promoted(3), Level::ACE);
        assert_eq!(Level::TWO.promoted(1).rank(), Rank::Three);
        assert!(Level::new(Rank::RedJoker).is_err());
        assert_eq!("T".parse::<Level>().unwrap().rank(), Rank::Ten);
        assert_eq!(Level::new(Rank::Five).unwrap().wild_card().to_string(), "H5");
    }

    fn arb_multiset() -> impl Strategy<Value = CardMultiset> {
        proptest::collection::vec(0u8..=2, NUM_CARDS).prop_map(|v| {
            let mut counts = [0u8; NUM_CARDS];
            counts.copy_from_slice(&v);
            CardMultiset::from_counts(counts).unwrap()
        })
    }

    proptest! {
        #[test]
        fn encode54_is_additive(a in arb_multiset(), b in arb_multiset()) {
            if let Some(u) = a.checked_add(&b) {
                let (ea, eb, eu) = (a.encode54(), b.encode54(), u.encode54());
                for i in 0..NUM_CARDS {
                    prop_assert_eq!(ea[i] + eb[i], eu[i]);
                }
                prop_assert_eq!(u.len(), a.len() + b.len());
                prop_assert_eq!(u.checked_sub(&b), Some(a));
            }
        }

        #[test]
        fn text_round_trip(a in arb_multiset()) {
            let encoded = a.encode54();
            prop_assert_eq!(encoded.iter().map(|&x| x as usize).sum::<usize>(), a.len());
            prop_assert_eq!(a.to_string().parse::<CardMultiset>().unwrap(), a);
        }
    }
}
