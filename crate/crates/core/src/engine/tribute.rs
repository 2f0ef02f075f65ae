//! Rule-driven tribute exchange at the start of every round after the first.

use serde::{Deserialize, Serialize};

use crate::cards::{single_order, Card, CardMultiset, Level};

use super::PlayerId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exchange {
    pub payer: PlayerId,
    pub receiver: PlayerId,
    pub tribute: Card,
    pub returned: Card,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TributeOutcome {
    /// The paying side holds both Red Jokers; the Banker leads.
    Cancelled {
        leader: PlayerId,
    },
    Paid {
        exchanges: Vec<Exchange>,
        leader: PlayerId,
    },
}

impl TributeOutcome {
    pub fn leader(&self) -> PlayerId {
        match self {
            TributeOutcome::Cancelled { leader } | TributeOutcome::Paid { leader, .. } => *leader,
        }
    }
}

/// The payer's highest single card other than the wild. A hand made only of
/// wilds pays a wild.
pub fn tribute_card(hand: &CardMultiset, level: Level) -> Option<Card> {
    let wild = level.wild_card();
    let best =
        |allow_wild: bool| hand.iter().filter(|&c| allow_wild || c != wild).max_by_key(|c| (single_order(c.rank(), level), c.index()));
    best(false).or_else(|| best(true))
}

/// The card a receiver hands back: the lowest single card with point ≤ 10,
/// never a wild, avoiding cards that belong to a natural bomb or straight
/// flush when another candidate exists.
pub fn return_card(hand: &CardMultiset, level: Level) -> Option<Card> {
    let wild = level.wild_card();
    let order = |c: &Card| (single_order(c.rank(), level), c.index());
    let low: Vec<Card> = hand.iter().filter(|&c| c != wild && !c.rank().is_joker() && c.rank().point() <= 10).collect();
    if low.is_empty() {
        return hand.iter().filter(|&c| c != wild).min_by_key(order).or_else(|| hand.iter().next());
    }
    low.iter()
        .copied()
        .filter(|&c| !in_bomb(hand, c) && !in_straight_flush(hand, c))
        .min_by_key(order)
        .or_else(|| low.iter().copied().min_by_key(order))
}

fn in_bomb(hand: &CardMultiset, card: Card) -> bool {
    hand.rank_count(card.rank()) >= 4
}

fn in_straight_flush(hand: &CardMultiset, card: Card) -> bool {
    let Some(suit) = card.suit() else { return false };
    let has = |pos: u8| hand.count(Card::plain(crate::cards::rank_at_sequence_position(pos), suit)) > 0;
    let positions = crate::cards::sequence_ordinal(card.rank()).unwrap_or(&[]);
    positions.iter().any(|&p| (1..=10u8).any(|start| start <= p && p < start + 5 && (start..start + 5).all(has)))
}

fn red_jokers(hand: &CardMultiset) -> u8 {
    hand.count(Card::RED_JOKER)
}

/// Run the tribute phase for a freshly dealt round. `order` is the previous
/// round's finish order and `level` the new round's level.
pub fn tribute_phase(hands: &mut [CardMultiset; 4], order: &[PlayerId; 4], level: Level) -> TributeOutcome {
    let banker = order[0];
    let double = order[1] == banker.partner();
    let payers: Vec<PlayerId> = if double { vec![order[2], order[3]] } else { vec![order[3]] };

    let jokers: u8 = payers.iter().map(|p| red_jokers(&hands[p.index()])).sum();
    if jokers >= 2 {
        return TributeOutcome::Cancelled { leader: banker };
    }

    let mut paid: Vec<(PlayerId, Card)> =
        payers.iter().map(|&p| (p, tribute_card(&hands[p.index()], level).expect("payer holds cards"))).collect();
    for &(p, c) in &paid {
        hands[p.index()].remove(c);
    }

    // Banker accepts the higher tribute; on a tie, the payer seated right after the Banker.
    paid.sort_by_key(|&(p, c)| {
        let seat_distance = (p.index() + 4 - banker.index()) % 4;
        (std::cmp::Reverse(single_order(c.rank(), level)), seat_distance)
    });
    let receivers: Vec<PlayerId> = if double { vec![banker, banker.partner()] } else { vec![banker] };

    let mut exchanges = Vec::new();
    for (&(payer, tribute), &receiver) in paid.iter().zip(receivers.iter()) {
        hands[receiver.index()].insert_n(tribute, 1);
        let returned = return_card(&hands[receiver.index()], level).expect("receiver holds cards");
        hands[receiver.index()].remove(returned);
        hands[payer.index()].insert_n(returned, 1);
        exchanges.push(Exchange { payer, receiver, tribute, returned });
    }
    let leader = exchanges[0].payer;
    TributeOutcome::Paid { exchanges, leader }
}
