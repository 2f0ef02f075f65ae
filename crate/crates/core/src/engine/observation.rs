use crate::cards::{CardMultiset, Level};
use crate::rules::{legal_actions, CardGroup};

use super::{EpisodeState, PlayerId};

/// What the partner did most recently this round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartnerMove {
    /// No action yet this round.
    None,
    Pass,
    Played(CardGroup),
    /// The partner has emptied his hand.
    Finished,
}

/// One seat's view of the game. Other hands appear only as card counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observation {
    pub viewer: PlayerId,
    pub hand: CardMultiset,
    /// Cards each seat has played this round, indexed by seat.
    pub played: [CardMultiset; 4],
    /// Cards each seat still holds, indexed by seat.
    pub hand_sizes: [u8; 4],
    pub to_beat: Option<(CardGroup, PlayerId)>,
    pub partner_move: PartnerMove,
    pub team_levels: [Level; 2],
    pub round_level: Level,
    pub round_index: u32,
    pub trick_leader: PlayerId,
    pub turn: PlayerId,
    pub finished: Vec<PlayerId>,
}

impl Observation {
    pub(super) fn from_state(state: &EpisodeState, viewer: PlayerId) -> Observation {
        let r = &state.round;
        let partner = viewer.partner();
        let partner_move = if r.is_finished(partner) {
            PartnerMove::Finished
        } else {
            match r.last_move[partner.index()] {
                None => PartnerMove::None,
                Some(g) if g.is_pass() => PartnerMove::Pass,
                Some(g) => PartnerMove::Played(g),
            }
        };
        Observation {
            viewer,
            hand: r.hands[viewer.index()],
            played: r.played,
            hand_sizes: r.hands.map(|h| h.len() as u8),
            to_beat: r.to_beat,
            partner_move,
            team_levels: state.team_levels,
            round_level: r.level,
            round_index: state.round_index,
            trick_leader: r.trick_leader,
            turn: r.turn,
            finished: r.finished.clone(),
        }
    }

    pub fn own_level(&self) -> Level {
        self.team_levels[self.viewer.team()]
    }

    pub fn opponent_level(&self) -> Level {
        self.team_levels[1 - self.viewer.team()]
    }

    pub fn to_beat_group(&self) -> Option<&CardGroup> {
        self.to_beat.as_ref().map(|(g, _)| g)
    }

    /// Legal actions for the viewer in this position.
    pub fn legal_actions(&self) -> Vec<CardGroup> {
        legal_actions(&self.hand, self.to_beat_group(), self.round_level)
    }

    /// Cards neither in the viewer's hand nor played by anyone.
    pub fn unseen(&self) -> CardMultiset {
        let mut seen = self.hand;
        for p in &self.played {
            seen = seen.checked_add(p).expect("conservation");
        }
        CardMultiset::full_deck().checked_sub(&seen).expect("conservation")
    }
}
