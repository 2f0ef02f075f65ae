//! Constructive move generation.
//!
//! Groups are generated shape by shape: a shape is a list of rank slots
//! (rank, copies needed, optional suit). Each slot takes some natural cards of
//! its rank and leaves the rest to wild substitution, bounded by the wilds
//! still unspent. The classifier in `classify.rs` is the independent route
//! used to check this module.

use crate::cards::{rank_at_sequence_position, Card, CardMultiset, Level, Rank, Suit, NUM_PLAIN_RANKS};

use super::{beats, CardGroup, GroupType};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Slot {
    rank: Rank,
    need: u8,
    suit: Option<Suit>,
    /// Same-rank parts must keep at least one natural card.
    min_natural: u8,
}

/// Kinds selected for generation, one bit per [`GroupType`] family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct KindMask(u16);

impl KindMask {
    const ALL: KindMask = KindMask(0x7ff);

    fn bit(kind: GroupType) -> u16 {
        1 << match kind {
            GroupType::Single => 0,
            GroupType::Pair => 1,
            GroupType::Triple => 2,
            GroupType::Tube => 3,
            GroupType::Plate => 4,
            GroupType::FullHouse => 5,
            GroupType::Straight => 6,
            GroupType::Bomb(_) => 7,
            GroupType::StraightFlush => 8,
            GroupType::JokerBomb => 9,
            GroupType::Pass => 10,
        }
    }

    fn only(kinds: &[GroupType]) -> KindMask {
        KindMask(kinds.iter().fold(0, |m, &k| m | KindMask::bit(k)))
    }

    fn has(self, kind: GroupType) -> bool {
        self.0 & KindMask::bit(kind) != 0
    }
}

/// (kind, start position for sequences or rank ordinal otherwise, cards, group rank)
type Candidate = (GroupType, u8, CardMultiset, Rank);

fn start_of(kind: GroupType, tag: u8) -> u8 {
    if kind.is_sequence() {
        tag
    } else {
        0
    }
}

struct Generator<'a> {
    hand: &'a CardMultiset,
    level: Level,
    wild: Card,
}

impl<'a> Generator<'a> {
    fn new(hand: &'a CardMultiset, level: Level) -> Self {
        Generator { hand, level, wild: level.wild_card() }
    }

    fn run(&self, kinds: KindMask, out: &mut Vec<Candidate>) {
        let hand = self.hand;
        if kinds.has(GroupType::Single) {
            for (i, &c) in hand.counts().iter().enumerate() {
                if c > 0 {
                    let card = Card::from_index(i).expect("index in range");
                    out.push((GroupType::Single, card.rank().ordinal(), CardMultiset::from_cards([card]).unwrap(), card.rank()));
                }
            }
        }
        if kinds.has(GroupType::JokerBomb) && hand.count(Card::BLACK_JOKER) == 2 && hand.count(Card::RED_JOKER) == 2 {
            let mut cards = CardMultiset::new();
            cards.insert_n(Card::BLACK_JOKER, 2);
            cards.insert_n(Card::RED_JOKER, 2);
            out.push((GroupType::JokerBomb, 0, cards, Rank::RedJoker));
        }
        let wilds = hand.count(self.wild);
        let rank_total = |r: Rank| hand.rank_count(r);

        if kinds.has(GroupType::Pair) {
            for r in Rank::ALL {
                if rank_total(r) == 0 || (r.is_joker() && rank_total(r) < 2) {
                    continue;
                }
                let slots = [Slot { rank: r, need: 2, suit: None, min_natural: 1 }];
                self.fill(&slots, GroupType::Pair, 0, r, out);
            }
        }
        if kinds.has(GroupType::Triple) {
            for &r in &Rank::ALL[..NUM_PLAIN_RANKS] {
                if rank_total(r) + wilds >= 3 && rank_total(r) > 0 {
                    let slots = [Slot { rank: r, need: 3, suit: None, min_natural: 1 }];
                    self.fill(&slots, GroupType::Triple, 0, r, out);
                }
            }
        }
        if kinds.has(GroupType::Bomb(4)) {
            for &r in &Rank::ALL[..NUM_PLAIN_RANKS] {
                // The level rank's own Hearts are counted once, in rank_total.
                let extra = if r == self.level.rank() { 0 } else { wilds };
                let max = (rank_total(r) + extra).min(10);
                for n in 4..=max {
                    let slots = [Slot { rank: r, need: n, suit: None, min_natural: 1 }];
                    self.fill(&slots, GroupType::Bomb(n), 0, r, out);
                }
            }
        }
        if kinds.has(GroupType::FullHouse) {
            for &t in &Rank::ALL[..NUM_PLAIN_RANKS] {
                if rank_total(t) == 0 || rank_total(t) + wilds < 3 {
                    continue;
                }
                for p in Rank::ALL {
                    if p == t || rank_total(p) == 0 || (p.is_joker() && rank_total(p) < 2) {
                        continue;
                    }
                    let slots =
                        [Slot { rank: t, need: 3, suit: None, min_natural: 1 }, Slot { rank: p, need: 2, suit: None, min_natural: 1 }];
                    self.fill(&slots, GroupType::FullHouse, 0, t, out);
                }
            }
        }
        let sequences: [(GroupType, u8, u8, u8); 3] =
            [(GroupType::Straight, 5, 1, 10), (GroupType::Tube, 3, 2, 12), (GroupType::Plate, 2, 3, 13)];
        for (kind, len, need, last_start) in sequences {
            if !kinds.has(kind) {
                continue;
            }
            for start in 1..=last_start {
                let mut slots = [Slot { rank: Rank::Two, need, suit: None, min_natural: 0 }; 5];
                let mut shortfall = 0u8;
                for (i, slot) in slots.iter_mut().take(len as usize).enumerate() {
                    slot.rank = rank_at_sequence_position(start + i as u8);
                    shortfall += need.saturating_sub(rank_total(slot.rank));
                }
                if shortfall > wilds {
                    continue;
                }
                self.fill(&slots[..len as usize], kind, start, rank_at_sequence_position(start), out);
            }
        }
        if kinds.has(GroupType::StraightFlush) {
            for suit in Suit::ALL {
                for start in 1..=10u8 {
                    let mut slots = [Slot { rank: Rank::Two, need: 1, suit: Some(suit), min_natural: 0 }; 5];
                    let mut shortfall = 0u8;
                    for (i, slot) in slots.iter_mut().enumerate() {
                        slot.rank = rank_at_sequence_position(start + i as u8);
                        if hand.count(Card::plain(slot.rank, suit)) == 0 {
                            shortfall += 1;
                        }
                    }
                    if shortfall > wilds {
                        continue;
                    }
                    self.fill(&slots, GroupType::StraightFlush, start, rank_at_sequence_position(start), out);
                }
            }
        }
    }

    fn fill(&self, slots: &[Slot], kind: GroupType, start: u8, rank: Rank, out: &mut Vec<Candidate>) {
        let wilds = self.hand.count(self.wild);
        let tag = if kind.is_sequence() { start } else { rank.ordinal() };
        self.fill_from(slots, CardMultiset::new(), wilds, 0, &mut |cards| out.push((kind, tag, cards, rank)));
    }

    /// `wilds_left` counts Heart level cards not yet placed, either as their own
    /// rank or as substitutes; `deficit` counts slots awaiting a substitute.
    fn fill_from(&self, slots: &[Slot], acc: CardMultiset, wilds_left: u8, deficit: u8, emit: &mut dyn FnMut(CardMultiset)) {
        let Some((slot, rest)) = slots.split_first() else {
            let mut cards = acc;
            cards.insert_n(self.wild, deficit);
            emit(cards);
            return;
        };
        if slot.rank.is_joker() {
            let card = Card::joker(slot.rank).expect("joker rank");
            if self.hand.count(card) >= slot.need {
                let mut next = acc;
                next.insert_n(card, slot.need);
                self.fill_from(rest, next, wilds_left, deficit, emit);
            }
            return;
        }
        if let Some(suit) = slot.suit {
            let card = Card::plain(slot.rank, suit);
            let natural_ok = if card == self.wild { wilds_left > deficit } else { self.hand.count(card) > 0 };
            if natural_ok {
                let mut next = acc;
                next.insert_n(card, 1);
                let left = wilds_left - u8::from(card == self.wild);
                self.fill_from(rest, next, left, deficit, emit);
            }
            if deficit < wilds_left {
                self.fill_from(rest, acc, wilds_left, deficit + 1, emit);
            }
            return;
        }

        let mut avail = [0u8; 4];
        for s in Suit::ALL {
            let c = Card::plain(slot.rank, s);
            avail[s.ordinal() as usize] = if c == self.wild { wilds_left } else { self.hand.count(c) };
        }
        let total: u8 = avail.iter().sum();
        let lo = slot.min_natural.max(slot.need.saturating_sub(wilds_left.saturating_sub(deficit)));
        let hi = slot.need.min(total);
        for m in lo..=hi {
            let gap = slot.need - m;
            for pick in submultisets(avail, m) {
                let heart_natural = if slot.rank == self.level.rank() { pick[0] } else { 0 };
                let left = wilds_left - heart_natural;
                if deficit + gap > left {
                    continue;
                }
                let mut next = acc;
                for s in Suit::ALL {
                    let n = pick[s.ordinal() as usize];
                    if n > 0 {
                        next.insert_n(Card::plain(slot.rank, s), n);
                    }
                }
                self.fill_from(rest, next, left, deficit + gap, emit);
            }
        }
    }
}

/// All per-suit count vectors bounded by `avail` with total `m`.
fn submultisets(avail: [u8; 4], m: u8) -> impl Iterator<Item = [u8; 4]> {
    let mut out = Vec::new();
    for a in 0..=avail[0].min(m) {
        for b in 0..=avail[1].min(m - a) {
            for c in 0..=avail[2].min(m - a - b) {
                let d = m - a - b - c;
                if d <= avail[3] {
                    out.push([a, b, c, d]);
                }
            }
        }
    }
    out.into_iter()
}

fn finish(mut cands: Vec<Candidate>, level: Level) -> Vec<CardGroup> {
    cands.sort_unstable_by_key(|a| (a.0, a.1, a.2));
    cands.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1 && a.2 == b.2);
    cands.into_iter().map(|(kind, tag, cards, rank)| CardGroup::from_parts(kind, rank, start_of(kind, tag), cards, level)).collect()
}

/// Every distinct group playable from a subset of `hand`, in a deterministic order.
pub fn enumerate_groups(hand: &CardMultiset, level: Level) -> Vec<CardGroup> {
    let mut cands = Vec::new();
    Generator::new(hand, level).run(KindMask::ALL, &mut cands);
    finish(cands, level)
}

/// Legal moves: every group when leading (Pass excluded); otherwise the groups
/// that beat `to_beat`, followed by Pass.
pub fn legal_actions(hand: &CardMultiset, to_beat: Option<&CardGroup>, level: Level) -> Vec<CardGroup> {
    let Some(target) = to_beat.filter(|g| !g.is_pass()) else {
        return enumerate_groups(hand, level);
    };
    let bombs = [GroupType::Bomb(4), GroupType::StraightFlush, GroupType::JokerBomb];
    let mask = if target.kind().is_bomb_class() {
        KindMask::only(&bombs)
    } else {
        let mut m = KindMask::only(&bombs);
        m.0 |= KindMask::bit(target.kind());
        m
    };
    let mut cands = Vec::new();
    Generator::new(hand, level).run(mask, &mut cands);
    // Cheap key filter before the canonical groups are built.
    cands.retain(|c| {
        c.0.is_bomb_class() || c.0 != target.kind() || {
            let key = if c.0.is_sequence() { c.1 } else { crate::cards::single_order(c.3, level) };
            key > target.key()
        }
    });
    let mut out: Vec<CardGroup> = finish(cands, level).into_iter().filter(|g| beats(g, target, level)).collect();
    out.push(CardGroup::PASS);
    out
}

pub const NUM_WILD_FLAGS: usize = 11;

/// Wild-card capability flags of a hand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WildFlags {
    pub holds_one: bool,
    pub holds_two: bool,
    /// Per kind, in the order Pair, Triple, Tube, Plate, FullHouse, Straight,
    /// Bomb, StraightFlush: some group of that kind uses a wild substitute.
    pub enables: [bool; 8],
    /// Wilds unlock a kind the natural cards cannot form at all.
    pub unlocks_new_kind: bool,
}

impl WildFlags {
    pub const KINDS: [GroupType; 8] = [
        GroupType::Pair,
        GroupType::Triple,
        GroupType::Tube,
        GroupType::Plate,
        GroupType::FullHouse,
        GroupType::Straight,
        GroupType::Bomb(4),
        GroupType::StraightFlush,
    ];

    pub fn to_array(&self) -> [bool; NUM_WILD_FLAGS] {
        let mut out = [false; NUM_WILD_FLAGS];
        out[0] = self.holds_one;
        out[1] = self.holds_two;
        out[2..10].copy_from_slice(&self.enables);
        out[10] = self.unlocks_new_kind;
        out
    }
}

pub fn wild_flags(hand: &CardMultiset, level: Level) -> WildFlags {
    let wilds = hand.count(level.wild_card());
    let mut flags = WildFlags { holds_one: wilds >= 1, holds_two: wilds >= 2, ..Default::default() };
    if wilds == 0 {
        return flags;
    }
    let gen = Generator::new(hand, level);
    for (i, kind) in WildFlags::KINDS.iter().enumerate() {
        let mut cands = Vec::new();
        gen.run(KindMask::only(&[*kind]), &mut cands);
        let (mut natural, mut wild) = (false, false);
        for (kind, tag, cards, rank) in cands {
            if CardGroup::from_parts(kind, rank, start_of(kind, tag), cards, level).wilds_used() > 0 {
                wild = true;
            } else {
                natural = true;
            }
            if natural && wild {
                break;
            }
        }
        flags.enables[i] = wild;
        flags.unlocks_new_kind |= wild && !natural;
    }
    flags
}
