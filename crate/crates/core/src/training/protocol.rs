//! Length-prefixed frames exchanged between actor processes and the learner:
//! `[u32 payload length][u8 kind][payload]`, integers little-endian.

use std::io::{self, Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{ACTION_DIM, STATE_DIM};

use super::Transition;

pub const MAX_FRAME: usize = 1 << 28;
const TRANSITION_BYTES: usize = STATE_DIM + ACTION_DIM + 4 + 1 + 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum FrameKind {
    Trajectory = 1,
    Params = 2,
    Hello = 3,
    Stats = 4,
}

impl FrameKind {
    fn from_u8(v: u8) -> Option<FrameKind> {
        Some(match v {
            1 => FrameKind::Trajectory,
            2 => FrameKind::Params,
            3 => FrameKind::Hello,
            4 => FrameKind::Stats,
            _ => return None,
        })
    }
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("unknown frame kind {0}")]
    Kind(u8),
    #[error("frame of {0} bytes exceeds the limit")]
    TooLarge(usize),
    #[error("malformed {what} payload at byte {offset}")]
    Malformed { what: &'static str, offset: usize },
    #[error("trajectory checksum mismatch")]
    Checksum,
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub kind: FrameKind,
    pub payload: Vec<u8>,
}

pub fn write_frame<W: Write>(out: &mut W, kind: FrameKind, payload: &[u8]) -> Result<(), ProtocolError> {
    if payload.len() > MAX_FRAME {
        return Err(ProtocolError::TooLarge(payload.len()));
    }
    out.write_all(&(payload.len() as u32).to_le_bytes())?;
    out.write_all(&[kind as u8])?;
    out.write_all(payload)?;
    out.flush()?;
    Ok(())
}

/// Next frame, or `None` on a clean end of stream between frames.
pub fn read_frame<R: Read>(input: &mut R) -> Result<Option<Frame>, ProtocolError> {
    let mut head = [0u8; 5];
    let mut got = 0;
    while got < head.len() {
        match input.read(&mut head[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => return Err(io::Error::from(io::ErrorKind::UnexpectedEof).into()),
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let len = u32::from_le_bytes(head[..4].try_into().expect("4")) as usize;
    if len > MAX_FRAME {
        return Err(ProtocolError::TooLarge(len));
    }
    let kind = FrameKind::from_u8(head[4]).ok_or(ProtocolError::Kind(head[4]))?;
    let mut payload = vec![0u8; len];
    input.read_exact(&mut payload)?;
    Ok(Some(Frame { kind, payload }))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hello {
    pub actor_id: u32,
    pub pid: u32,
}

/// Periodic actor counters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActorStats {
    pub actor_id: u32,
    pub episodes: u64,
    pub transitions: u64,
    /// Parameter versions this actor has switched to, in order.
    pub versions_used: Vec<u64>,
}

/// A batch of stamped transitions from one actor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrajectoryBatch {
    pub actor_id: u32,
    /// Consecutive per actor, starting at 0.
    pub seq: u64,
    pub transitions: Vec<Transition>,
}

impl TrajectoryBatch {
    /// Header, transitions, then a CRC-32 of everything before it.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.transitions.len() * TRANSITION_BYTES + 4);
        out.extend_from_slice(&self.actor_id.to_le_bytes());
        out.extend_from_slice(&self.seq.to_le_bytes());
        out.extend_from_slice(&(self.transitions.len() as u32).to_le_bytes());
        for t in &self.transitions {
            out.extend(t.state.iter().map(|&v| v as u8));
            out.extend(t.action.iter().map(|&v| v as u8));
            out.extend_from_slice(&t.q_actor().to_le_bytes());
            out.push(t.reward as u8);
            out.extend_from_slice(&t.param_version.to_le_bytes());
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, ProtocolError> {
        let bad = |offset| ProtocolError::Malformed { what: "trajectory", offset };
        if bytes.len() < 20 {
            return Err(bad(0));
        }
        let (body, crc) = bytes.split_at(bytes.len() - 4);
        if crc32fast::hash(body) != u32::from_le_bytes(crc.try_into().expect("4")) {
            return Err(ProtocolError::Checksum);
        }
        let actor_id = u32::from_le_bytes(body[0..4].try_into().expect("4"));
        let seq = u64::from_le_bytes(body[4..12].try_into().expect("8"));
        let count = u32::from_le_bytes(body[12..16].try_into().expect("4")) as usize;
        if body.len() != 16 + count * TRANSITION_BYTES {
            return Err(bad(16));
        }
        let mut transitions = Vec::with_capacity(count);
        for chunk in body[16..].chunks_exact(TRANSITION_BYTES) {
            let mut t = Transition::default();
            for (d, &s) in t.state.iter_mut().zip(&chunk[..STATE_DIM]) {
                *d = s as i8;
            }
            let rest = &chunk[STATE_DIM..];
            for (d, &s) in t.action.iter_mut().zip(&rest[..ACTION_DIM]) {
                *d = s as i8;
            }
            let rest = &rest[ACTION_DIM..];
            t.set_q_actor(f32::from_le_bytes(rest[..4].try_into().expect("4")));
            t.reward = rest[4] as i8;
            t.param_version = u64::from_le_bytes(rest[5..13].try_into().expect("8"));
            transitions.push(t);
        }
        Ok(TrajectoryBatch { actor_id, seq, transitions })
    }
}
