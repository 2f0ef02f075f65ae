//! One task per session owns the game and serializes every mutation.

use std::sync::Arc;
use std::time::Duration;

use guandan::engine::{EpisodeState, Event, LogEntry, LogRecorder, PlayerId};
use guandan::evalharness::Policy;
use guandan::{CardGroup, CardMultiset};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use tokio::sync::{mpsc, oneshot};

use crate::protocol::{PromotionView, SeatKind, ServerMsg, StateView};

pub type Outbox = mpsc::UnboundedSender<ServerMsg>;

/// Policies backing the non-human seat kinds.
#[derive(Clone)]
pub struct Bots {
    pub bot: Arc<dyn Policy>,
    pub random: Arc<dyn Policy>,
    pub heuristic: Arc<dyn Policy>,
    /// Watchdog for one bot decision.
    pub budget: Duration,
}

impl Bots {
    fn policy(&self, kind: SeatKind) -> Option<Arc<dyn Policy>> {
        match kind {
            SeatKind::Human => None,
            SeatKind::Bot => Some(self.bot.clone()),
            SeatKind::Random => Some(self.random.clone()),
            SeatKind::Heuristic => Some(self.heuristic.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub id: String,
    pub seed: u64,
    pub seats: Vec<SeatKind>,
    pub connected: [bool; 4],
    pub round: u32,
    pub moves: usize,
    pub team_levels: [String; 2],
    pub winning_team: Option<usize>,
}

pub enum Command {
    Join { seat: u8, conn: u64, outbox: Outbox, reply: oneshot::Sender<Result<(), String>> },
    Leave { seat: u8, conn: u64 },
    Action { seat: u8, text: String },
    State { seat: u8 },
    Chat { seat: u8, text: String },
    BotMove { seat: u8, turn: usize, action: CardGroup },
    Summary { reply: oneshot::Sender<SessionSummary> },
    Log { reply: oneshot::Sender<Vec<LogEntry>> },
}

#[derive(Debug, Clone)]
pub struct SessionHandle {
    pub id: String,
    pub seats: Vec<SeatKind>,
    tx: mpsc::Sender<Command>,
}

impl SessionHandle {
    pub async fn send(&self, cmd: Command) -> bool {
        self.tx.send(cmd).await.is_ok()
    }

    pub async fn summary(&self) -> Option<SessionSummary> {
        let (reply, rx) = oneshot::channel();
        self.send(Command::Summary { reply }).await;
        rx.await.ok()
    }

    /// Every accepted move so far, in the engine's log format.
    pub async fn log(&self) -> Option<Vec<LogEntry>> {
        let (reply, rx) = oneshot::channel();
        self.send(Command::Log { reply }).await;
        rx.await.ok()
    }
}

/// Start a session task. Requires exactly four seats.
pub fn spawn_session(id: String, seats: Vec<SeatKind>, seed: u64, bots: Bots) -> Result<SessionHandle, String> {
    let kinds: [SeatKind; 4] = seats.clone().try_into().map_err(|v: Vec<SeatKind>| format!("need exactly 4 seats, got {}", v.len()))?;
    let (tx, rx) = mpsc::channel(64);
    let session = Session {
        id: id.clone(),
        seed,
        state: EpisodeState::new_episode(seed),
        log: LogRecorder::new(),
        kinds,
        policies: kinds.map(|k| bots.policy(k)),
        conns: Default::default(),
        bot_pending: None,
        budget: bots.budget,
        rng: ChaCha8Rng::seed_from_u64(seed ^ 0x5EED),
        me: tx.downgrade(),
    };
    tokio::spawn(session.run(rx));
    Ok(SessionHandle { id, seats, tx })
}

struct Session {
    id: String,
    seed: u64,
    state: EpisodeState,
    log: LogRecorder,
    kinds: [SeatKind; 4],
    policies: [Option<Arc<dyn Policy>>; 4],
    conns: [Option<(u64, Outbox)>; 4],
    bot_pending: Option<usize>,
    budget: Duration,
    rng: ChaCha8Rng,
    me: mpsc::WeakSender<Command>,
}

/// Resolve client text against the legal actions: full notation, `PASS`, or
/// a bare card list matching exactly one legal group.
pub fn parse_action(text: &str, legal: &[CardGroup], state: &EpisodeState) -> Result<CardGroup, String> {
    let text = text.trim();
    if let Ok(g) = CardGroup::parse(text, state.round_level()) {
        return Ok(g);
    }
    let cards: CardMultiset = text.parse().map_err(|e| format!("cannot read {text:?}: {e}"))?;
    let matches: Vec<&CardGroup> = legal.iter().filter(|g| *g.cards() == cards).collect();
    match matches.as_slice() {
        [] => Err(format!("{text} is not a legal action")),
        [g] => Ok(**g),
        many => Err(format!("{text} is ambiguous; send one of: {}", many.iter().map(|g| g.to_string()).collect::<Vec<_>>().join(" | "))),
    }
}

impl Session {
    async fn run(mut self, mut rx: mpsc::Receiver<Command>) {
        self.schedule_bot();
        while let Some(cmd) = rx.recv().await {
            match cmd {
                Command::Join { seat, conn, outbox, reply } => {
                    let r = self.join(seat, conn, outbox);
                    let _ = reply.send(r);
                }
                Command::Leave { seat, conn } => {
                    if let Some(slot) = self.conns.get_mut(seat as usize) {
                        if slot.as_ref().is_some_and(|(c, _)| *c == conn) {
                            *slot = None;
                        }
                    }
                }
                Command::Action { seat, text } => {
                    if let Err(reason) = self.human_action(seat, &text) {
                        self.send(seat, ServerMsg::Reject { reason });
                    }
                }
                Command::State { seat } => self.push_state(seat),
                Command::Chat { seat, text } => self.broadcast(ServerMsg::Chat { seat: Some(seat), text }),
                Command::BotMove { seat, turn, action } => {
                    if self.bot_pending == Some(turn) && self.log.entries().len() == turn {
                        self.bot_pending = None;
                        if let Err(e) = self.apply(seat, action) {
                            log::error!("session {}: bot move rejected: {e}", self.id);
                            let fallback = self.state.legal_actions()[0];
                            let _ = self.apply(seat, fallback);
                        }
                    }
                }
                Command::Summary { reply } => {
                    let _ = reply.send(self.summary());
                }
                Command::Log { reply } => {
                    let _ = reply.send(self.log.entries().to_vec());
                }
            }
        }
    }

    fn summary(&self) -> SessionSummary {
        SessionSummary {
            id: self.id.clone(),
            seed: self.seed,
            seats: self.kinds.to_vec(),
            connected: std::array::from_fn(|i| self.conns[i].is_some()),
            round: self.state.round_index,
            moves: self.log.entries().len(),
            team_levels: self.state.team_levels.map(|l| l.to_string()),
            winning_team: self.state.winner,
        }
    }

    fn join(&mut self, seat: u8, conn: u64, outbox: Outbox) -> Result<(), String> {
        let kind = *self.kinds.get(seat as usize).ok_or_else(|| format!("no seat {seat}"))?;
        if kind != SeatKind::Human {
            return Err(format!("seat {seat} is a bot seat"));
        }
        if self.conns[seat as usize].is_some() {
            log::info!("session {}: seat {seat} reconnected", self.id);
        }
        self.conns[seat as usize] = Some((conn, outbox));
        self.send(seat, ServerMsg::Hello { session: self.id.clone(), seat, seats: self.kinds.to_vec() });
        self.push_state(seat);
        Ok(())
    }

    fn send(&self, seat: u8, msg: ServerMsg) {
        if let Some(Some((_, out))) = self.conns.get(seat as usize) {
            let _ = out.send(msg);
        }
    }

    fn broadcast(&self, msg: ServerMsg) {
        for seat in 0..4 {
            self.send(seat, msg.clone());
        }
    }

    fn push_state(&self, seat: u8) {
        if seat > 3 {
            return;
        }
        let view = StateView::build(&self.id, &self.state, PlayerId::new(seat));
        let legal = view.legal_actions.clone();
        self.send(seat, ServerMsg::State { view: Box::new(view) });
        if !legal.is_empty() {
            self.send(seat, ServerMsg::LegalActions { actions: legal });
        }
    }

    fn human_action(&mut self, seat: u8, text: &str) -> Result<(), String> {
        if self.kinds.get(seat as usize) != Some(&SeatKind::Human) {
            return Err("not a human seat".into());
        }
        if self.state.is_terminal() {
            return Err("the episode is over".into());
        }
        if self.state.current_player().index() != seat as usize {
            return Err(format!("not your turn; seat {} is to move", self.state.current_player().index()));
        }
        let legal = self.state.legal_actions();
        let action = parse_action(text, &legal, &self.state)?;
        self.apply(seat, action)
    }

    fn apply(&mut self, seat: u8, action: CardGroup) -> Result<(), String> {
        let events = self.log.step(&mut self.state, &action).map_err(|e| e.to_string())?;
        self.broadcast(ServerMsg::Action { seat, action: action.to_string() });
        for e in events {
            match e {
                Event::RoundOver { round, order, rewards, promotion } => self.broadcast(ServerMsg::RoundEnd {
                    round,
                    order: order.map(|p| p.index() as u8),
                    rewards: rewards.0,
                    promotion: PromotionView::from(&promotion),
                }),
                Event::EpisodeOver { winning_team } => self.broadcast(ServerMsg::EpisodeEnd { winning_team }),
                _ => {}
            }
        }
        for s in 0..4 {
            self.push_state(s);
        }
        self.schedule_bot();
        Ok(())
    }

    /// If a bot is to move, compute its move off the session task under the
    /// watchdog; a late or failed bot plays the first legal action.
    fn schedule_bot(&mut self) {
        if self.state.is_terminal() || self.bot_pending.is_some() {
            return;
        }
        let player = self.state.current_player();
        let Some(policy) = self.policies[player.index()].clone() else { return };
        let Some(me) = self.me.upgrade() else { return };
        let turn = self.log.entries().len();
        self.bot_pending = Some(turn);
        let obs = self.state.observe(player);
        let legal = obs.legal_actions();
        let fallback = legal[0];
        let seed = self.rng.next_u64();
        let budget = self.budget;
        let id = self.id.clone();
        tokio::spawn(async move {
            let work = tokio::task::spawn_blocking(move || {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                policy.act(&obs, &legal, &mut rng)
            });
            let action = match tokio::time::timeout(budget, work).await {
                Ok(Ok(a)) => a,
                Ok(Err(e)) => {
                    log::error!("session {id}: bot task failed: {e}");
                    fallback
                }
                Err(_) => {
                    log::warn!("session {id}: bot seat {} exceeded {budget:?}", player.index());
                    fallback
                }
            };
            let _ = me.send(Command::BotMove { seat: player.index() as u8, turn, action }).await;
        });
    }
}
