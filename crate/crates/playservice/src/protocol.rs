//! JSON messages exchanged over `/ws`. Every message is an object with a
//! `type` field; cards and groups use the text notation of the `guandan`
//! crate (`"H7"`, `"PAIR[9]: S9 H9"`, `"PASS"`).

use guandan::cards::Level;
use guandan::engine::{EpisodeState, Observation, PartnerMove, PlayerId, Promotion};
use serde::{Deserialize, Serialize};

/// Sent by a browser or an external bot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMsg {
    /// Claim a human seat of an existing session.
    Hello {
        session: String,
        seat: u8,
        #[serde(default)]
        name: Option<String>,
    },
    /// A group in full notation, a bare card list, or `PASS`.
    Action {
        action: String,
    },
    /// Ask for a fresh `state` (after a reconnect, say).
    State,
    Chat {
        text: String,
    },
}

/// Sent by the server.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMsg {
    Hello {
        session: String,
        seat: u8,
        seats: Vec<SeatKind>,
    },
    State {
        view: Box<StateView>,
    },
    /// Only sent to the seat whose turn it is.
    LegalActions {
        actions: Vec<String>,
    },
    /// A move somebody made, public to every seat.
    Action {
        seat: u8,
        action: String,
    },
    Reject {
        reason: String,
    },
    RoundEnd {
        round: u32,
        order: [u8; 4],
        rewards: [i8; 4],
        promotion: PromotionView,
    },
    EpisodeEnd {
        winning_team: usize,
    },
    Chat {
        seat: Option<u8>,
        text: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeatKind {
    Human,
    /// The server's network policy, or the heuristic when none is loaded.
    Bot,
    Random,
    Heuristic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromotionView {
    pub team: usize,
    pub from: String,
    pub to: String,
    pub wins_game: bool,
}

impl From<&Promotion> for PromotionView {
    fn from(p: &Promotion) -> Self {
        PromotionView { team: p.team, from: p.from.to_string(), to: p.to.to_string(), wins_game: p.wins_game }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Greatest {
    pub seat: u8,
    pub action: String,
}

/// Everything one seat may know about the table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateView {
    pub session: String,
    pub seat: u8,
    /// The seat's own cards.
    pub hand: String,
    pub team_levels: [String; 2],
    pub round_level: String,
    pub round: u32,
    pub turn: u8,
    /// The group to beat in the current trick and who played it.
    pub current_greatest: Option<Greatest>,
    /// Each seat's latest move this round (`PASS` included).
    pub last_moves: [Option<String>; 4],
    pub partner_last_move: Option<String>,
    pub hand_sizes: [u8; 4],
    pub finished: Vec<u8>,
    /// Empty unless it is this seat's turn.
    pub legal_actions: Vec<String>,
    pub winning_team: Option<usize>,
}

fn level_text(l: Level) -> String {
    l.to_string()
}

impl StateView {
    pub fn build(session: &str, state: &EpisodeState, seat: PlayerId) -> StateView {
        let obs: Observation = state.observe(seat);
        let my_turn = state.winner.is_none() && state.current_player() == seat;
        StateView {
            session: session.to_string(),
            seat: seat.index() as u8,
            hand: obs.hand.to_string(),
            team_levels: obs.team_levels.map(level_text),
            round_level: level_text(obs.round_level),
            round: obs.round_index,
            turn: obs.turn.index() as u8,
            current_greatest: obs.to_beat.map(|(g, p)| Greatest { seat: p.index() as u8, action: g.to_string() }),
            last_moves: state.round.last_move.map(|m| m.map(|g| g.to_string())),
            partner_last_move: match obs.partner_move {
                PartnerMove::None | PartnerMove::Finished => None,
                PartnerMove::Pass => Some("PASS".into()),
                PartnerMove::Played(g) => Some(g.to_string()),
            },
            hand_sizes: obs.hand_sizes,
            finished: obs.finished.iter().map(|p| p.index() as u8).collect(),
            legal_actions: if my_turn { obs.legal_actions().iter().map(|g| g.to_string()).collect() } else { Vec::new() },
            winning_team: state.winner,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn messages_use_a_type_tag() {
        let m: ClientMsg = serde_json::from_str(r#"{"type":"action","action":"PASS"}"#).unwrap();
        assert_eq!(m, ClientMsg::Action { action: "PASS".into() });
        let m: ClientMsg = serde_json::from_str(r#"{"type":"hello","session":"s1","seat":2}"#).unwrap();
        assert_eq!(m, ClientMsg::Hello { session: "s1".into(), seat: 2, name: None });
        let text = serde_json::to_string(&ServerMsg::EpisodeEnd { winning_team: 1 }).unwrap();
        assert_eq!(text, r#"{"type":"episode_end","winning_team":1}"#);
        let text = serde_json::to_string(&ServerMsg::LegalActions { actions: vec!["PASS".into()] }).unwrap();
        assert_eq!(text, r#"{"type":"legal_actions","actions":["PASS"]}"#);
    }

    #[test]
    fn view_shows_only_own_hand() {
        let state = EpisodeState::new_episode(3);
        let seat = state.current_player();
        let v = StateView::build("s", &state, seat);
        assert_eq!(v.hand, state.round.hands[seat.index()].to_string());
        assert_eq!(v.hand_sizes, [27; 4]);
        assert_eq!(v.legal_actions.len(), state.legal_actions().len());
        let other = StateView::build("s", &state, seat.next());
        assert!(other.legal_actions.is_empty());
        assert!(v.current_greatest.is_none());
    }
}
