//! GuanDan card-game engine and Deep Monte-Carlo self-play training.
//!
//! The numeric parts (feature vectors, the Q-network, training targets) are
//! generic over [`Scalar`]; the aliases below fix the production precision.

pub mod cards;
pub mod engine;
pub mod evalharness;
pub mod features;
pub mod qnet;
pub mod rules;
pub mod scalar;
pub mod training;

pub use cards::{Card, CardMultiset, Level, Rank, Suit};
pub use rules::{CardGroup, GroupType};
pub use scalar::Scalar;

/// Scalar used by actors, the learner and checkpoints.
pub type Real = f32;
pub type QNet = qnet::Mlp<Real>;
