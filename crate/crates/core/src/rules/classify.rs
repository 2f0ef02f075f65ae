use crate::cards::{rank_at_sequence_position, sequence_ordinal, Card, CardMultiset, Level, Rank, NUM_RANKS};

use super::{CardGroup, GroupType, MAX_GROUP_SIZE};

/// Every interpretation of exactly `cards` as a legal group at `level`.
///
/// Each possible number `k` of substituting wilds is tried in turn; the
/// remaining cards (including any Heart level cards kept as themselves) must
/// fit the group's shape with exactly `k` missing slots.
pub fn classify(cards: &CardMultiset, level: Level) -> Vec<CardGroup> {
    let n = cards.len();
    let mut found: Vec<(GroupType, Rank, u8)> = Vec::new();
    if n == 0 || n > MAX_GROUP_SIZE {
        return Vec::new();
    }
    if n == 1 {
        let card = cards.iter().next().expect("one card");
        return vec![CardGroup::from_parts(GroupType::Single, card.rank(), 0, *cards, level)];
    }
    if n == 4 && cards.count(Card::BLACK_JOKER) == 2 && cards.count(Card::RED_JOKER) == 2 {
        return vec![CardGroup::from_parts(GroupType::JokerBomb, Rank::RedJoker, 0, *cards, level)];
    }

    let wild = level.wild_card();
    let wilds = cards.count(wild);
    for k in 0..=wilds {
        let mut naturals = *cards;
        for _ in 0..k {
            naturals.remove(wild);
        }
        let mut counts = [0u8; NUM_RANKS];
        for c in naturals.iter() {
            counts[c.rank().ordinal() as usize] += 1;
        }
        let has_joker = counts[13] + counts[14] > 0;
        let present: Vec<Rank> = Rank::ALL.iter().copied().filter(|r| counts[r.ordinal() as usize] > 0).collect();

        // Same-rank groups need at least one natural card of their rank.
        if present.len() == 1 {
            let r = present[0];
            let c = counts[r.ordinal() as usize] as usize;
            debug_assert_eq!(c + k as usize, n);
            if r.is_joker() {
                if k == 0 && n == 2 {
                    found.push((GroupType::Pair, r, 0));
                }
            } else {
                match n {
                    2 => found.push((GroupType::Pair, r, 0)),
                    3 => found.push((GroupType::Triple, r, 0)),
                    _ => found.push((GroupType::Bomb(n as u8), r, 0)),
                }
            }
        }

        if n == 5 {
            full_houses(&counts, &present, k, &mut found);
            if !has_joker && present.iter().all(|r| counts[r.ordinal() as usize] == 1) {
                let positions = || present.iter().copied();
                for start in 1..=10u8 {
                    if fits_window(positions(), start, 5) {
                        found.push((GroupType::Straight, rank_at_sequence_position(start), start));
                        let mut suits = naturals.iter().map(|c| c.suit());
                        let first = suits.next().flatten();
                        if suits.all(|s| s == first) {
                            found.push((GroupType::StraightFlush, rank_at_sequence_position(start), start));
                        }
                    }
                }
            }
        }

        if n == 6 && !has_joker {
            for start in 1..=12u8 {
                if present.iter().all(|r| counts[r.ordinal() as usize] <= 2) && fits_window(present.iter().copied(), start, 3) {
                    found.push((GroupType::Tube, rank_at_sequence_position(start), start));
                }
            }
            for start in 1..=13u8 {
                if present.iter().all(|r| counts[r.ordinal() as usize] <= 3) && fits_window(present.iter().copied(), start, 2) {
                    found.push((GroupType::Plate, rank_at_sequence_position(start), start));
                }
            }
        }
    }

    let mut out: Vec<CardGroup> = Vec::with_capacity(found.len());
    for (kind, rank, start) in found {
        let g = CardGroup::from_parts(kind, rank, start, *cards, level);
        if !out.contains(&g) {
            out.push(g);
        }
    }
    out
}

/// Every present rank has a sequence position inside `[start, start + len)`.
/// Counts per position are checked by the caller.
fn fits_window(mut ranks: impl Iterator<Item = Rank>, start: u8, len: u8) -> bool {
    ranks.all(|r| match sequence_ordinal(r) {
        Ok(ords) => ords.iter().any(|&p| p >= start && p < start + len),
        Err(_) => false,
    })
}

fn full_houses(counts: &[u8; NUM_RANKS], present: &[Rank], k: u8, found: &mut Vec<(GroupType, Rank, u8)>) {
    if present.len() != 2 {
        return;
    }
    for (t, p) in [(present[0], present[1]), (present[1], present[0])] {
        let (ct, cp) = (counts[t.ordinal() as usize], counts[p.ordinal() as usize]);
        if t.is_joker() || ct > 3 || cp > 2 {
            continue;
        }
        if p.is_joker() && cp != 2 {
            continue;
        }
        if (3 - ct) + (2 - cp) == k {
            found.push((GroupType::FullHouse, t, 0));
        }
    }
}
