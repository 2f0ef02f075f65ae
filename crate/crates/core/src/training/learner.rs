use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::features::{INPUT_DIM, STATE_DIM};
use crate::qnet::{Adam, Mlp};
use crate::scalar::Scalar;

use super::{clipped_loss, LearnerConfig, Optimizer, ReplayBuffer, Transition};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("replay buffer holds {have} transitions, a batch needs {need}")]
pub struct NotReady {
    pub have: usize,
    pub need: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub step: u64,
    pub loss: f64,
    pub version: u64,
    /// Share of the batch whose target sat on a band edge.
    pub clipped: f64,
}

/// Owns the parameters, the optimizer state and the replay buffer.
#[derive(Debug)]
pub struct Learner<T: Scalar> {
    pub net: Mlp<T>,
    pub config: LearnerConfig,
    pub buffer: ReplayBuffer,
    adam: Option<Adam<T>>,
    rng: ChaCha8Rng,
    steps: u64,
    versions: Vec<u64>,
}

impl<T: Scalar> Learner<T> {
    pub fn new(config: LearnerConfig, net: Mlp<T>) -> Self {
        let adam = match config.optimizer {
            Optimizer::Adam => Some(Adam::new(&net, T::of(config.learning_rate))),
            Optimizer::Sgd => None,
        };
        Learner {
            buffer: ReplayBuffer::new(config.buffer_capacity),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            versions: vec![net.version],
            net,
            config,
            adam,
            steps: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Every parameter version this learner has held, in order.
    pub fn version_history(&self) -> &[u64] {
        &self.versions
    }

    pub fn push(&mut self, t: Transition) {
        self.buffer.push(t);
    }

    pub fn ready(&self) -> bool {
        self.buffer.len() >= self.config.batch_size
    }

    /// Sample a batch, form clipped targets against the current parameters
    /// and take one optimizer step.
    pub fn step(&mut self) -> Result<StepReport, NotReady> {
        if !self.ready() {
            return Err(NotReady { have: self.buffer.len(), need: self.config.batch_size });
        }
        let n = self.config.batch_size;
        let batch: Vec<Transition> = self.buffer.sample(n, &mut self.rng).into_iter().copied().collect();
        let report = self.train_on(&batch);
        Ok(report)
    }

    /// One optimizer step on an explicit batch.
    pub fn train_on(&mut self, batch: &[Transition]) -> StepReport {
        let n = batch.len();
        let mut inputs = Array2::<T>::zeros((n, INPUT_DIM));
        for (mut row, t) in inputs.rows_mut().into_iter().zip(batch) {
            for (j, &v) in t.state.iter().chain(t.action.iter()).enumerate() {
                if v != 0 {
                    row[j] = T::of(v as f64);
                }
            }
        }
        debug_assert_eq!(STATE_DIM + 54, INPUT_DIM);
        let tape = self.net.forward_tape(inputs.view()).expect("input width");
        let q_learner: Vec<T> = tape.output().to_vec();
        let q_actor: Vec<T> = batch.iter().map(|t| T::of(t.q_actor() as f64)).collect();
        let rewards: Vec<T> = batch.iter().map(|t| T::of(t.reward as f64)).collect();
        let (loss, dq) = clipped_loss(&q_actor, &q_learner, &rewards, T::of(self.config.lambda));
        let clipped = dq.iter().filter(|g| **g == T::zero()).count() as f64 / n as f64;
        let grads = self.net.backward(&tape, Array1::from(dq).view());
        match &mut self.adam {
            Some(adam) => adam.step(&mut self.net, &grads),
            None => self.net.sgd_step(&grads, T::of(self.config.learning_rate)),
        }
        self.steps += 1;
        self.versions.push(self.net.version);
        StepReport { step: self.steps, loss: loss.to_f64().unwrap_or(f64::NAN), version: self.net.version, clipped }
    }
}
