//! Game state machine: dealing, tricks, finish order, rewards, tribute and
//! leveling across the rounds of an episode.

mod log;
mod observation;
mod scoring;
mod tribute;


use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cards::{Card, CardMultiset, Level};
use crate::rules::{beats, classify, legal_actions, CardGroup};

pub use log::{read_jsonl, replay_log, LogEntry, LogError, LogRecorder};
pub use observation::{Observation, PartnerMove};
pub use scoring::{assign_round_rewards, promote, promotion_steps, Promotion, RewardVector};
pub use tribute::{return_card, tribute_card, tribute_phase, Exchange, TributeOutcome};

pub const HAND_SIZE: usize = 27;

/// Seat index 0..=3. Seats 0 and 2 form team 0, seats 1 and 3 team 1; play
/// passes from seat `p` to seat `p + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct PlayerId(u8);

impl PlayerId {
    pub const ALL: [PlayerId; 4] = [PlayerId(0), PlayerId(1), PlayerId(2), PlayerId(3)];

    /// # Panics
    /// If `seat > 3`.
    pub fn new(seat: u8) -> PlayerId {
        assert!(seat < 4, "seat {seat} out of range");
        PlayerId(seat)
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn team(self) -> usize {
        (self.0 % 2) as usize
    }

    #[inline]
    pub fn partner(self) -> PlayerId {
        PlayerId((self.0 + 2) % 4)
    }

    #[inline]
    pub fn next(self) -> PlayerId {
        PlayerId((self.0 + 1) % 4)
    }

    /// Seat `k` places after this one.
    #[inline]
    pub fn offset(self, k: u8) -> PlayerId {
        PlayerId((self.0 + k) % 4)
    }
}

impl TryFrom<u8> for PlayerId {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, String> {
        if v < 4 {
            Ok(PlayerId(v))
        } else {
            Err(format!("seat {v} out of range"))
        }
    }
}

impl From<PlayerId> for u8 {
    fn from(p: PlayerId) -> u8 {
        p.0
    }
}

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StepError {
    #[error("the episode is over")]
    EpisodeOver,
    #[error("{player} does not hold {cards}")]
    NotHeld { player: PlayerId, cards: CardMultiset },
    #[error("{0} is not a valid reading of its cards")]
    NotAGroup(String),
    #[error("cannot pass when leading a trick")]
    PassOnLead,
    #[error("{action} does not beat {to_beat}")]
    DoesNotBeat { action: String, to_beat: String },
}

/// Something that happened while applying one action.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Played { player: PlayerId, action: String },
    Passed { player: PlayerId },
    TrickWon { winner: PlayerId, next_leader: PlayerId },
    Finished { player: PlayerId, place: u8 },
    RoundOver { round: u32, order: [PlayerId; 4], rewards: RewardVector, promotion: Promotion },
    RoundStarted { round: u32, level: Level, leader: PlayerId, tribute: Option<TributeOutcome> },
    EpisodeOver { winning_team: usize },
}

/// State of the round in progress.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundState {
    pub hands: [CardMultiset; 4],
    pub level: Level,
    pub trick_leader: PlayerId,
    /// The group to beat and who played it; `None` when the trick is open.
    pub to_beat: Option<(CardGroup, PlayerId)>,
    /// Seats that passed since the last play in this trick.
    pub passed: [bool; 4],
    pub turn: PlayerId,
    pub finished: Vec<PlayerId>,
    /// Every non-pass group each seat played this round, in order.
    pub history: [Vec<CardGroup>; 4],
    pub played: [CardMultiset; 4],
    /// Each seat's most recent action this round.
    pub last_move: [Option<CardGroup>; 4],
    /// Actions taken so far this round.
    pub turn_count: u32,
}

impl RoundState {
    fn new(hands: [CardMultiset; 4], level: Level, leader: PlayerId) -> RoundState {
        RoundState {
            hands,
            level,
            trick_leader: leader,
            to_beat: None,
            passed: [false; 4],
            turn: leader,
            finished: Vec::new(),
            history: Default::default(),
            played: [CardMultiset::new(); 4],
            last_move: [None; 4],
            turn_count: 0,
        }
    }

    pub fn is_finished(&self, p: PlayerId) -> bool {
        self.finished.contains(&p)
    }

    /// Cards still in hands plus cards played this round.
    pub fn total_cards(&self) -> usize {
        self.hands.iter().chain(self.played.iter()).map(|m| m.len()).sum()
    }

    fn next_active(&self, from: PlayerId) -> PlayerId {
        let mut p = from.next();
        while self.is_finished(p) {
            p = p.next();
        }
        p
    }

    fn is_over(&self) -> bool {
        self.finished.len() >= 3 || (self.finished.len() == 2 && self.finished[0].team() == self.finished[1].team())
    }

    /// Finish order with the players still holding cards ranked by hand
    /// size, fewer first, then by seat.
    fn finish_order(&self) -> [PlayerId; 4] {
        let mut rest: Vec<PlayerId> = PlayerId::ALL.into_iter().filter(|p| !self.is_finished(*p)).collect();
        rest.sort_by_key(|p| (self.hands[p.index()].len(), p.index()));
        let v: Vec<PlayerId> = self.finished.iter().copied().chain(rest).collect();
        [v[0], v[1], v[2], v[3]]
    }
}

/// A full episode: rounds are played until one team wins at level A.
#[derive(Debug, Clone)]
pub struct EpisodeState {
    seed: u64,
    rng: ChaCha8Rng,
    pub team_levels: [Level; 2],
    pub round: RoundState,
    /// 1-based index of the round in progress.
    pub round_index: u32,
    pub last_order: Option<[PlayerId; 4]>,
    pub last_tribute: Option<TributeOutcome>,
    pub winner: Option<usize>,
}

impl EpisodeState {
    /// Deal the first round at level 2 from a deterministic shuffle.
    pub fn new_episode(seed: u64) -> EpisodeState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hands = deal(&mut rng);
        let leader = PlayerId::new(rng.gen_range(0..4));
        EpisodeState {
            seed,
            rng,
            team_levels: [Level::TWO; 2],
            round: RoundState::new(hands, Level::TWO, leader),
            round_index: 1,
            last_order: None,
            last_tribute: None,
            winner: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_terminal(&self) -> bool {
        self.winner.is_some()
    }

    pub fn round_level(&self) -> Level {
        self.round.level
    }

    pub fn current_player(&self) -> PlayerId {
        self.round.turn
    }

    pub fn to_beat(&self) -> Option<&CardGroup> {
        self.round.to_beat.as_ref().map(|(g, _)| g)
    }

    /// Legal actions of the player to move; empty once the episode is over.
    pub fn legal_actions(&self) -> Vec<CardGroup> {
        if self.is_terminal() {
            return Vec::new();
        }
        let r = &self.round;
        legal_actions(&r.hands[r.turn.index()], self.to_beat(), r.level)
    }

    /// Check `action` for the player to move without applying it.
    pub fn validate(&self, action: &CardGroup) -> Result<(), StepError> {
        if self.is_terminal() {
            return Err(StepError::EpisodeOver);
        }
        let r = &self.round;
        let player = r.turn;
        if action.is_pass() {
            return if r.to_beat.is_none() { Err(StepError::PassOnLead) } else { Ok(()) };
        }
        if !action.cards().is_subset_of(&r.hands[player.index()]) {
            return Err(StepError::NotHeld { player, cards: *action.cards() });
        }
        if !classify(action.cards(), r.level).contains(action) {
            return Err(StepError::NotAGroup(action.to_string()));
        }
        if let Some((target, _)) = &r.to_beat {
            if !beats(action, target, r.level) {
                return Err(StepError::DoesNotBeat { action: action.to_string(), to_beat: target.to_string() });
            }
        }
        Ok(())
    }

    /// Apply the current player's action. At the end of a round the next
    /// round is dealt (tribute included) before returning, unless the
    /// episode is over.
    pub fn step(&mut self, action: &CardGroup) -> Result<Vec<Event>, StepError> {
        self.validate(action)?;
        let mut events = Vec::new();
        let r = &mut self.round;
        let player = r.turn;
        r.turn_count += 1;
        r.last_move[player.index()] = Some(*action);

        if action.is_pass() {
            events.push(Event::Passed { player });
            r.passed[player.index()] = true;
            let (_, owner) = r.to_beat.expect("validated follow");
            let all_passed = PlayerId::ALL.into_iter().filter(|&p| p != owner && !r.is_finished(p)).all(|p| r.passed[p.index()]);
            if all_passed {
                let leader = if r.is_finished(owner) { owner.partner() } else { owner };
                r.to_beat = None;
                r.passed = [false; 4];
                r.trick_leader = leader;
                r.turn = leader;
                events.push(Event::TrickWon { winner: owner, next_leader: leader });
            } else {
                r.turn = r.next_active(player);
            }
            return Ok(events);
        }

        let hand = &mut r.hands[player.index()];
        *hand = hand.checked_sub(action.cards()).expect("validated subset");
        r.played[player.index()] = r.played[player.index()].checked_add(action.cards()).expect("conservation");
        r.history[player.index()].push(*action);
        r.to_beat = Some((*action, player));
        r.passed = [false; 4];
        events.push(Event::Played { player, action: action.to_string() });

        if r.hands[player.index()].is_empty() {
            r.finished.push(player);
            events.push(Event::Finished { player, place: r.finished.len() as u8 });
            if r.is_over() {
                self.end_round(&mut events);
                return Ok(events);
            }
        }
        r.turn = r.next_active(player);
        Ok(events)
    }

    fn end_round(&mut self, events: &mut Vec<Event>) {
        let order = self.round.finish_order();
        let level = self.round.level;
        let rewards = assign_round_rewards(&order, level);
        let promotion = promote(&order, level, self.team_levels);
        events.push(Event::RoundOver { round: self.round_index, order, rewards, promotion });
        self.last_order = Some(order);
        if promotion.wins_game {
            self.winner = Some(promotion.team);
            events.push(Event::EpisodeOver { winning_team: promotion.team });
            return;
        }
        self.team_levels[promotion.team] = promotion.to;
        let level = promotion.to;
        let mut hands = deal(&mut self.rng);
        let outcome = tribute_phase(&mut hands, &order, level);
        let leader = outcome.leader();
        self.round_index += 1;
        self.round = RoundState::new(hands, level, leader);
        self.last_tribute = Some(outcome.clone());
        events.push(Event::RoundStarted { round: self.round_index, level, leader, tribute: Some(outcome) });
    }

    /// The view `viewer` is entitled to.
    pub fn observe(&self, viewer: PlayerId) -> Observation {
        Observation::from_state(self, viewer)
    }
}

fn deal(rng: &mut ChaCha8Rng) -> [CardMultiset; 4] {
    let mut deck: Vec<Card> = Card::all().flat_map(|c| [c, c]).collect();
    deck.shuffle(rng);
    let mut hands = [CardMultiset::new(); 4];
    for (i, chunk) in deck.chunks(HAND_SIZE).enumerate() {
        hands[i] = CardMultiset::from_cards(chunk.iter().copied()).expect("two copies per card");
    }
    hands
}
