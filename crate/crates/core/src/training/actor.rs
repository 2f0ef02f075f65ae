use rand::Rng;
use thiserror::Error;

use crate::cards::Level;
use crate::engine::{EpisodeState, Event, PlayerId, RewardVector, StepError};
use crate::features::{encode_action, encode_state_compact, FeatureError, ACTION_DIM};
use crate::qnet::{Mlp, QNetError};
use crate::scalar::Scalar;

use super::Transition;

#[derive(Debug, Error)]
pub enum ActorError {
    #[error("no legal actions")]
    NoLegalActions,
    #[error(transparent)]
    Step(#[from] StepError),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Net(#[from] QNetError),
}

/// With probability `epsilon` a uniformly random index, otherwise the first
/// index holding the largest value.
pub fn epsilon_greedy_select<T: PartialOrd + Copy, R: Rng>(q: &[T], epsilon: f64, rng: &mut R) -> Result<usize, ActorError> {
    if q.is_empty() {
        return Err(ActorError::NoLegalActions);
    }
    if epsilon > 0.0 && rng.gen_bool(epsilon.min(1.0)) {
        return Ok(rng.gen_range(0..q.len()));
    }
    let mut best = 0;
    for (i, v) in q.iter().enumerate().skip(1) {
        if *v > q[best] {
            best = i;
        }
    }
    Ok(best)
}

/// How a round ended, as stamped onto its transitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundRecord {
    pub round: u32,
    pub level: Level,
    pub order: [PlayerId; 4],
    pub rewards: RewardVector,
}

#[derive(Debug, Clone, Default)]
pub struct ActorEpisode {
    /// Per seat, every decision of the episode in order.
    pub trajectories: [Vec<Transition>; 4],
    pub rounds: Vec<RoundRecord>,
    pub winner: Option<usize>,
}

/// Self-play one episode with every seat using `net`, handing each finished
/// round's stamped transitions (per seat) to `on_round`. Tribute is resolved
/// by the engine and produces no transitions.
pub fn run_actor_episode_with<T: Scalar, R: Rng>(
    seed: u64,
    net: &Mlp<T>,
    epsilon: f64,
    rng: &mut R,
    mut on_round: impl FnMut(&RoundRecord, [Vec<Transition>; 4]),
) -> Result<(Vec<RoundRecord>, Option<usize>), ActorError> {
    let mut state = EpisodeState::new_episode(seed);
    let mut pending: [Vec<Transition>; 4] = Default::default();
    let mut rounds = Vec::new();
    while !state.is_terminal() {
        let player = state.current_player();
        let obs = state.observe(player);
        let legal = obs.legal_actions();
        let compact = encode_state_compact(&obs)?;
        let s: Vec<T> = compact.iter().map(|&v| T::of(v as f64)).collect();
        let actions: Vec<[i8; ACTION_DIM]> = legal.iter().map(encode_action).collect();
        let q = net.evaluate_actions(&s, &actions)?;
        let q = q.as_slice().expect("contiguous");
        let i = epsilon_greedy_select(q, epsilon, rng)?;
        let q_actor = q[i].to_f32().unwrap_or(0.0);
        pending[player.index()].push(Transition::new(compact, actions[i], q_actor, net.version));
        let level = state.round_level();
        for e in state.step(&legal[i])? {
            if let Event::RoundOver { round, order, rewards, .. } = e {
                let record = RoundRecord { round, level, order, rewards };
                let mut batch: [Vec<Transition>; 4] = Default::default();
                for p in PlayerId::ALL {
                    let mut ts = std::mem::take(&mut pending[p.index()]);
                    for t in &mut ts {
                        t.reward = rewards.get(p);
                    }
                    batch[p.index()] = ts;
                }
                on_round(&record, batch);
                rounds.push(record);
            }
        }
    }
    Ok((rounds, state.winner))
}

/// Self-play one episode and return the four stamped trajectories.
pub fn run_actor_episode<T: Scalar, R: Rng>(seed: u64, net: &Mlp<T>, epsilon: f64, rng: &mut R) -> Result<ActorEpisode, ActorError> {
    let mut out = ActorEpisode::default();
    let (rounds, winner) = run_actor_episode_with(seed, net, epsilon, rng, |_, batch| {
        for (traj, ts) in out.trajectories.iter_mut().zip(batch) {
            traj.extend(ts);
        }
    })?;
    out.rounds = rounds;
    out.winner = winner;
    Ok(out)
}
