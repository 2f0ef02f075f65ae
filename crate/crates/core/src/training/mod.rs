//! Deep Monte-Carlo self-play: ε-greedy actors, a FIFO replay buffer, clipped
//! learner targets and the actor/learner wire protocol.

mod actor;
mod buffer;
pub mod dist;
mod learner;
pub mod protocol;
mod target;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{CompactState, ACTION_DIM, STATE_DIM};

pub use actor::{epsilon_greedy_select, run_actor_episode, run_actor_episode_with, ActorEpisode, RoundRecord};
pub use buffer::ReplayBuffer;
pub use learner::{Learner, StepReport};
pub use target::{clipped_loss, preprocess_target, NEAR_ZERO};

/// One decision: the state, the chosen action, the actor's Q for it and the
/// round reward later stamped on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transition {
    pub state: CompactState,
    pub action: [i8; ACTION_DIM],
    /// Bit pattern of the actor's `f32` Q value.
    q_actor_bits: u32,
    pub reward: i8,
    pub param_version: u64,
}

impl Default for Transition {
    fn default() -> Self {
        Transition { state: [0; STATE_DIM], action: [0; ACTION_DIM], q_actor_bits: 0, reward: 0, param_version: 0 }
    }
}

impl Transition {
    pub fn new(state: CompactState, action: [i8; ACTION_DIM], q_actor: f32, param_version: u64) -> Self {
        Transition { state, action, q_actor_bits: q_actor.to_bits(), reward: 0, param_version }
    }

    pub fn q_actor(&self) -> f32 {
        f32::from_bits(self.q_actor_bits)
    }

    pub fn set_q_actor(&mut self, q: f32) {
        self.q_actor_bits = q.to_bits();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ActorConfig {
    pub epsilon: f64,
    /// Episodes between parameter refreshes.
    pub sync_period: u32,
    pub actors: u32,
    pub seed: u64,
}

impl Default for ActorConfig {
    fn default() -> Self {
        ActorConfig { epsilon: 0.05, sync_period: 1, actors: 4, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearnerConfig {
    pub lambda: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub hidden: Vec<usize>,
    pub seed: u64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            lambda: 0.2,
            batch_size: 512,
            buffer_capacity: 1_000_000,
            learning_rate: 1e-4,
            optimizer: Optimizer::Adam,
            hidden: crate::qnet::DEFAULT_HIDDEN.to_vec(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("epsilon must lie in [0, 1], got {0}")]
    Epsilon(f64),
    #[error("lambda must be positive, got {0}")]
    Lambda(f64),
    #[error("{0} must be at least 1")]
    Zero(&'static str),
    #[error("learning rate must be positive and finite, got {0}")]
    LearningRate(f64),
}

impl ActorConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(ConfigError::Epsilon(self.epsilon));
        }
        if self.sync_period == 0 {
            return Err(ConfigError::Zero("sync_period"));
        }
        if self.actors == 0 {
            return Err(ConfigError::Zero("actors"));
        }
        Ok(())
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.lambda.is_nan() || self.lambda <= 0.0 {
            return Err(ConfigError::Lambda(self.lambda));
        }
        if self.batch_size == 0 {
            return Err(ConfigError::Zero("batch_size"));
        }
        if self.buffer_capacity == 0 {
            return Err(ConfigError::Zero("buffer_capacity"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(ConfigError::LearningRate(self.learning_rate));
        }
        if self.hidden.contains(&0) {
            return Err(ConfigError::Zero("hidden width"));
        }
        Ok(())
    }
}
