use serde::{Deserialize, Serialize};

use crate::cards::Level;

use super::PlayerId;

/// Terminal round reward per seat. Teammates share a value and the two teams
/// are negations of each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RewardVector(pub [i8; 4]);

impl RewardVector {
    pub fn get(&self, player: PlayerId) -> i8 {
        self.0[player.index()]
    }
}

/// Levels a winning team gains: 3, 2 or 1 for the Banker's partner finishing
/// second, third or last.
pub fn promotion_steps(order: &[PlayerId; 4]) -> u8 {
    let banker = order[0];
    let partner_pos = order.iter().position(|&p| p == banker.partner()).expect("partner in order");
    (4 - partner_pos) as u8
}

/// Round reward from the finish order. A round played at level A with the
/// Banker's partner finishing last cannot decide the game and scores zero.
pub fn assign_round_rewards(order: &[PlayerId; 4], round_level: Level) -> RewardVector {
    let banker = order[0];
    let steps = promotion_steps(order);
    let stalled = round_level.is_ace() && steps == 1;
    let value = if stalled { 0 } else { steps as i8 };
    let mut r = [0i8; 4];
    for p in PlayerId::ALL {
        r[p.index()] = if p.team() == banker.team() { value } else { -value };
    }
    RewardVector(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Promotion {
    pub team: usize,
    pub from: Level,
    pub to: Level,
    /// The team won the game with this round.
    pub wins_game: bool,
}

/// Apply the round result to the team levels.
///
/// A team below A climbs 1..3 levels but stops at A. A team already at A
/// wins the game only by winning a round played at A with its partner second
/// or third; otherwise it stays at A.
pub fn promote(order: &[PlayerId; 4], round_level: Level, team_levels: [Level; 2]) -> Promotion {
    let team = order[0].team();
    let from = team_levels[team];
    let steps = promotion_steps(order);
    if from.is_ace() {
        let wins_game = round_level.is_ace() && steps >= 2;
        return Promotion { team, from, to: from, wins_game };
    }
    Promotion { team, from, to: from.promoted(steps), wins_game: false }
}
