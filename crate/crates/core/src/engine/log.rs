//! JSONL game logs, one line per action, replayable from the episode seed.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cards::Level;
use crate::rules::{CardGroup, GroupParseError};

use super::{EpisodeState, Event, PlayerId, StepError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub seed: u64,
    pub round: u32,
    pub turn: u32,
    pub player: PlayerId,
    pub level: Level,
    pub action: String,
    /// Hand sizes right after the action, indexed by seat.
    pub hands_remaining: [u8; 4],
    /// Present on the action that ended a round.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finish_order: Option<[PlayerId; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rewards: Option<[i8; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub winning_team: Option<usize>,
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("line {line}: {source}")]
    Parse { line: usize, source: GroupParseError },
    #[error("line {line}: {source}")]
    Step { line: usize, source: StepError },
    #[error("line {line}: {what}")]
    Mismatch { line: usize, what: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Steps an episode and keeps a log line for every action.
#[derive(Debug, Default)]
pub struct LogRecorder {
    entries: Vec<LogEntry>,
}

impl LogRecorder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn step(&mut self, state: &mut EpisodeState, action: &CardGroup) -> Result<Vec<Event>, StepError> {
        let player = state.current_player();
        let round = state.round_index;
        let turn = state.round.turn_count;
        let level = state.round_level();
        let mut sizes = state.round.hands.map(|h| h.len() as u8);
        let events = state.step(action)?;
        sizes[player.index()] -= action.cards().len() as u8;
        let mut entry = LogEntry {
            seed: state.seed(),
            round,
            turn,
            player,
            level,
            action: action.to_string(),
            hands_remaining: sizes,
            finish_order: None,
            rewards: None,
            winning_team: None,
        };
        for e in &events {
            match e {
                Event::RoundOver { order, rewards, .. } => {
                    entry.finish_order = Some(*order);
                    entry.rewards = Some(rewards.0);
                }
                Event::EpisodeOver { winning_team } => entry.winning_team = Some(*winning_team),
                _ => {}
            }
        }
        self.entries.push(entry);
        Ok(events)
    }

    pub fn entries(&self) -> &[LogEntry] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<LogEntry> {
        self.entries
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> io::Result<()> {
        for e in &self.entries {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<LogEntry>, LogError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| LogError::Json { line: i + 1, source })?);
    }
    Ok(out)
}

/// Re-run a logged episode from its seed, checking every recorded field.
/// Returns the final state.
pub fn replay_log(entries: &[LogEntry]) -> Result<EpisodeState, LogError> {
    let Some(first) = entries.first() else {
        return Err(LogError::Mismatch { line: 0, what: "empty log".into() });
    };
    let mut state = EpisodeState::new_episode(first.seed);
    let mut rec = LogRecorder::new();
    for (i, e) in entries.iter().enumerate() {
        let line = i + 1;
        let action = CardGroup::parse(&e.action, state.round_level()).map_err(|source| LogError::Parse { line, source })?;
        rec.step(&mut state, &action).map_err(|source| LogError::Step { line, source })?;
        let got = rec.entries.last().expect("just recorded");
        if got != e {
            return Err(LogError::Mismatch { line, what: format!("expected {e:?}, replay gave {got:?}") });
        }
    }
    Ok(state)
}
