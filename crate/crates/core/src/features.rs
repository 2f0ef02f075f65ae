//! State and action encodings fed to the Q-network.
//!
//! | range     | width | content                                                   |
//! |-----------|-------|-----------------------------------------------------------|
//! | 0..54     | 54    | own hand                                                  |
//! | 54..108   | 54    | unseen cards (deck minus own hand minus everything played) |
//! | 108..162  | 54    | group to beat, zero when leading                          |
//! | 162..216  | 54    | partner's last move, zero on pass, -1 once the partner is out |
//! | 216..300  | 3×28  | one-hot hand sizes of the next three seats                |
//! | 300..462  | 3×54  | cards played by the next three seats                      |
//! | 462..502  | 40    | own level, opponent level, round level (13 each), 0       |
//! | 502..513  | 11    | wild-card flags                                           |
//!
//! "Next three seats" always runs in play order from the viewer: the
//! opponent on the right, the partner, the opponent on the left.

use std::io::{self, Read, Write};

use thiserror::Error;

use crate::cards::{CardMultiset, Level, NUM_CARDS, NUM_PLAIN_RANKS};
use crate::engine::{Observation, PartnerMove};
use crate::rules::{wild_flags, CardGroup, NUM_WILD_FLAGS};
use crate::scalar::Scalar;

pub const STATE_DIM: usize = 513;
pub const ACTION_DIM: usize = 54;
pub const INPUT_DIM: usize = STATE_DIM + ACTION_DIM;

pub const HAND: usize = 0;
pub const UNSEEN: usize = 54;
pub const TO_BEAT: usize = 108;
pub const PARTNER_MOVE: usize = 162;
pub const HAND_SIZES: usize = 216;
pub const HAND_SIZE_SLOTS: usize = 28;
pub const OTHERS_PLAYED: usize = 300;
pub const LEVELS: usize = 462;
pub const WILD_FLAGS: usize = 502;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FeatureError {
    #[error("inconsistent observation: {0}")]
    Inconsistent(String),
    #[error("expected {expected} values, got {got}")]
    Dimension { expected: usize, got: usize },
}

/// Integer-valued state encoding; every entry lies in -1..=2.
pub type CompactState = [i8; STATE_DIM];

fn put54(out: &mut [i8], at: usize, cards: &CardMultiset) {
    for (o, &c) in out[at..at + NUM_CARDS].iter_mut().zip(cards.counts().iter()) {
        *o = c as i8;
    }
}

fn put_level(out: &mut [i8], at: usize, level: Level) {
    out[at + level.ordinal() as usize] = 1;
}

/// Encode `obs` with small integers. [`encode_state`] converts to floats.
pub fn encode_state_compact(obs: &Observation) -> Result<CompactState, FeatureError> {
    let mut all = obs.hand;
    for p in &obs.played {
        all = all.checked_add(p).ok_or_else(|| FeatureError::Inconsistent("more than two copies of a card".into()))?;
    }
    let unseen =
        CardMultiset::full_deck().checked_sub(&all).ok_or_else(|| FeatureError::Inconsistent("cards beyond the double deck".into()))?;
    if obs.hand_sizes[obs.viewer.index()] as usize != obs.hand.len() {
        return Err(FeatureError::Inconsistent("own hand size disagrees with the hand".into()));
    }
    if obs.hand_sizes.iter().any(|&n| n as usize >= HAND_SIZE_SLOTS) {
        return Err(FeatureError::Inconsistent("hand size out of range".into()));
    }
    if obs.hand_sizes.iter().map(|&n| n as usize).sum::<usize>() != unseen.len() + obs.hand.len() {
        return Err(FeatureError::Inconsistent("hand sizes do not account for the unseen cards".into()));
    }

    let mut out = [0i8; STATE_DIM];
    put54(&mut out, HAND, &obs.hand);
    put54(&mut out, UNSEEN, &unseen);
    if let Some((g, _)) = &obs.to_beat {
        put54(&mut out, TO_BEAT, g.cards());
    }
    match obs.partner_move {
        PartnerMove::Played(g) => put54(&mut out, PARTNER_MOVE, g.cards()),
        PartnerMove::Finished => out[PARTNER_MOVE..PARTNER_MOVE + NUM_CARDS].fill(-1),
        PartnerMove::None | PartnerMove::Pass => {}
    }
    for k in 0..3u8 {
        let seat = obs.viewer.offset(k + 1);
        let base = HAND_SIZES + HAND_SIZE_SLOTS * k as usize;
        out[base + obs.hand_sizes[seat.index()] as usize] = 1;
        put54(&mut out, OTHERS_PLAYED + NUM_CARDS * k as usize, &obs.played[seat.index()]);
    }
    put_level(&mut out, LEVELS, obs.own_level());
    put_level(&mut out, LEVELS + NUM_PLAIN_RANKS, obs.opponent_level());
    put_level(&mut out, LEVELS + 2 * NUM_PLAIN_RANKS, obs.round_level);
    for (i, f) in wild_flags(&obs.hand, obs.round_level).to_array().iter().enumerate() {
        out[WILD_FLAGS + i] = *f as i8;
    }
    debug_assert_eq!(WILD_FLAGS + NUM_WILD_FLAGS, STATE_DIM);
    Ok(out)
}

pub fn encode_state<T: Scalar>(obs: &Observation) -> Result<Vec<T>, FeatureError> {
    Ok(encode_state_compact(obs)?.iter().map(|&v| T::of(v as f64)).collect())
}

/// Card counts of the action; Pass is all zeros.
pub fn encode_action(action: &CardGroup) -> [i8; ACTION_DIM] {
    let mut out = [0i8; ACTION_DIM];
    put54(&mut out, 0, action.cards());
    out
}

/// The network input: state followed by the action encoding.
pub fn encode_input<T: Scalar>(state: &[T], action: &CardGroup) -> Result<Vec<T>, FeatureError> {
    if state.len() != STATE_DIM {
        return Err(FeatureError::Dimension { expected: STATE_DIM, got: state.len() });
    }
    let mut out = Vec::with_capacity(INPUT_DIM);
    out.extend_from_slice(state);
    out.extend(encode_action(action).iter().map(|&v| T::of(v as f64)));
    Ok(out)
}

/// Network inputs sampled every `stride` decisions from uniformly random
/// self-play with the given seeds. Deterministic, so suitable for regression
/// fixtures.
pub fn sample_inputs(seeds: &[u64], stride: usize) -> Vec<Vec<f32>> {
    use rand::{Rng, SeedableRng};
    let mut out = Vec::new();
    for &seed in seeds {
        let mut state = crate::engine::EpisodeState::new_episode(seed);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut n = 0usize;
        while !state.is_terminal() {
            let obs = state.observe(state.current_player());
            let legal = obs.legal_actions();
            let action = legal[rng.gen_range(0..legal.len())];
            if n.is_multiple_of(stride.max(1)) {
                let s = encode_state::<f32>(&obs).expect("engine observations are consistent");
                out.push(encode_input(&s, &action).expect("state width"));
            }
            state.step(&action).expect("legal action");
            n += 1;
        }
    }
    out
}

/// Write vectors as `u32` count, then per vector a `u32` length and
/// little-endian `f32` values.
pub fn write_fixture<W: Write>(mut out: W, vectors: &[Vec<f32>]) -> io::Result<()> {
    out.write_all(&(vectors.len() as u32).to_le_bytes())?;
    for v in vectors {
        out.write_all(&(v.len() as u32).to_le_bytes())?;
        for x in v {
            out.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_fixture<R: Read>(mut input: R) -> io::Result<Vec<Vec<f32>>> {
    let mut word = [0u8; 4];
    input.read_exact(&mut word)?;
    let n = u32::from_le_bytes(word) as usize;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        input.read_exact(&mut word)?;
        let len = u32::from_le_bytes(word) as usize;
        let mut v = Vec::with_capacity(len);
        for _ in 0..len {
            input.read_exact(&mut word)?;
            v.push(f32::from_le_bytes(word));
        }
        out.push(v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{EpisodeState, PlayerId};

    #[test]
    fn layout_is_contiguous() {
        assert_eq!(UNSEEN, HAND + 54);
        assert_eq!(TO_BEAT, UNSEEN + 54);
        assert_eq!(PARTNER_MOVE, TO_BEAT + 54);
        assert_eq!(HAND_SIZES, PARTNER_MOVE + 54);
        assert_eq!(OTHERS_PLAYED, HAND_SIZES + 3 * 28);
        assert_eq!(LEVELS, OTHERS_PLAYED + 3 * 54);
        assert_eq!(WILD_FLAGS, LEVELS + 40);
        assert_eq!(STATE_DIM, WILD_FLAGS + 11);
        assert_eq!(INPUT_DIM, 567);
    }

    #[test]
    fn opening_state() {
        let st = EpisodeState::new_episode(5);
        let leader = st.current_player();
        let s = encode_state_compact(&st.observe(leader)).unwrap();
        assert!(s[TO_BEAT..TO_BEAT + 54].iter().all(|&v| v == 0));
        for k in 0..3 {
            let seg = &s[HAND_SIZES + 28 * k..HAND_SIZES + 28 * (k + 1)];
            assert_eq!(seg.iter().map(|&v| v as i32).sum::<i32>(), 1);
            assert_eq!(seg[27], 1);
        }
        assert_eq!(s[HAND..HAND + 54].iter().map(|&v| v as i32).sum::<i32>(), 27);
        assert_eq!(s[UNSEEN..UNSEEN + 54].iter().map(|&v| v as i32).sum::<i32>(), 81);
        // Levels: all at 2.
        assert_eq!(s[LEVELS], 1);
        assert_eq!(s[LEVELS + 13], 1);
        assert_eq!(s[LEVELS + 26], 1);
        assert_eq!(s[LEVELS..WILD_FLAGS].iter().map(|&v| v as i32).sum::<i32>(), 3);
        assert_eq!(s[WILD_FLAGS - 1], 0);
    }

    #[test]
    fn finished_partner_reads_minus_one() {
        let mut st = EpisodeState::new_episode(5);
        st.round.finished.push(PlayerId::new(2));
        let moved = st.round.hands[2];
        st.round.played[2] = moved;
        st.round.hands[2] = CardMultiset::new();
        let s = encode_state_compact(&st.observe(PlayerId::new(0))).unwrap();
        assert!(s[PARTNER_MOVE..PARTNER_MOVE + 54].iter().all(|&v| v == -1));
        // The partner is the second of the next three seats.
        assert_eq!(s[HAND_SIZES + 28], 1);
        let played: i32 = s[OTHERS_PLAYED + 54..OTHERS_PLAYED + 108].iter().map(|&v| v as i32).sum();
        assert_eq!(played, 27);
    }

    #[test]
    fn inconsistent_observation_is_rejected() {
        let st = EpisodeState::new_episode(5);
        let mut obs = st.observe(PlayerId::new(0));
        obs.played[1] = obs.hand;
        assert!(matches!(encode_state_compact(&obs), Err(FeatureError::Inconsistent(_))));
        let mut obs = st.observe(PlayerId::new(0));
        obs.hand_sizes[0] = 3;
        assert!(encode_state_compact(&obs).is_err());
    }

    #[test]
    fn action_encoding() {
        let lv: Level = "2".parse().unwrap();
        let bomb = CardGroup::parse("BOMB4[7]: H7 S7 D7 C7", lv).unwrap();
        let a = encode_action(&bomb);
        assert_eq!(a.iter().filter(|&&v| v == 1).count(), 4);
        assert_eq!(a[20..24], [1; 4], "7s sit at 4*5..4*5+4");
        let state = vec![0.5f64; STATE_DIM];
        let x = encode_input(&state, &CardGroup::PASS).unwrap();
        assert_eq!(x.len(), INPUT_DIM);
        assert!(x[STATE_DIM..].iter().all(|&v| v == 0.0));
        assert!(encode_input(&state[1..], &bomb).is_err());
    }

    #[test]
    fn fixture_round_trip() {
        let v = vec![vec![1.0f32, -1.0, 0.25], vec![], vec![3.5]];
        let mut buf = Vec::new();
        write_fixture(&mut buf, &v).unwrap();
        assert_eq!(read_fixture(&buf[..]).unwrap(), v);
        assert!(read_fixture(&buf[..buf.len() - 1]).is_err());
    }
}
