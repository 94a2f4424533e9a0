//! UWB double-sided two-way ranging with payload piggybacking.
//!
//! ```text
//!  initiator A                responder B
//!     | ---- poll ----------->  |
//!     |  <------- response ---- |   Db = B's reply delay
//!     | ---- final ---------->  |   Da = A's reply delay
//!  Ra = A's round trip, Rb = B's round trip
//!  tof = (Ra*Rb - Da*Db) / (Ra + Rb + Da + Db)
//! ```
//!
//! Timestamps are taken on each node's own clock over a session-local time
//! axis whose origin is the poll transmission, so absolute simulation time
//! never enters the subtraction and sub-picosecond resolution survives.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::model::{local_time, ClockModel, NodeId, Position, World};

/// Meters per nanosecond.
pub const SPEED_OF_LIGHT: f64 = 0.299_792_458;
pub const MAX_PAYLOAD: usize = 64;
pub const FRAME_HEADER_LEN: usize = 12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RangingError {
    #[error("malformed ranging session: denominator {0} is not positive")]
    MalformedSession(f64),
    #[error("illegal session transition {from:?} -> {to:?}")]
    IllegalTransition { from: SessionState, to: SessionState },
    #[error("session timestamps incomplete")]
    Incomplete,
}

/// Durations of one DS-TWR exchange, in local-clock nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangingTimestamps {
    pub round_a: f64,
    pub round_b: f64,
    pub reply_a: f64,
    pub reply_b: f64,
}

pub fn ds_twr_tof(ts: &RangingTimestamps) -> Result<f64, RangingError> {
    let denom = ts.round_a + ts.round_b + ts.reply_a + ts.reply_b;
    if denom <= 0.0 || denom.is_nan() {
        return Err(RangingError::MalformedSession(denom));
    }
    Ok((ts.round_a * ts.round_b - ts.reply_a * ts.reply_b) / denom)
}

pub fn tof_to_distance(tof_ns: f64) -> f64 {
    tof_ns * SPEED_OF_LIGHT
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UwbChannel {
    pub sigma_los: f64,
    /// Mean of the exponential positive bias added on obstructed paths.
    pub nlos_bias_mean: f64,
    pub max_range: f64,
}

impl Default for UwbChannel {
    fn default() -> Self {
        Self {
            sigma_los: 0.10,
            nlos_bias_mean: 0.5,
            max_range: 60.0,
        }
    }
}

/// One channel realization of the propagation distance between `a` and `b`.
/// `None` when the pair is out of range and frames are lost.
pub fn measure_range<R: Rng + ?Sized>(
    world: &World,
    channel: &UwbChannel,
    a: &Position,
    b: &Position,
    rng: &mut R,
) -> Option<f64> {
    let d_true = a.distance(b);
    if d_true > channel.max_range {
        return None;
    }
    let mut d = d_true;
    if channel.sigma_los > 0.0 {
        let n = Normal::new(0.0, channel.sigma_los).expect("sigma is finite and positive");
        d += n.sample(rng);
    }
    if channel.nlos_bias_mean > 0.0 && world.is_nlos(a, b) {
        let e = Exp::new(1.0 / channel.nlos_bias_mean).expect("positive rate");
        d += e.sample(rng);
    }
    Some(d.max(0.0))
}

/// Round-robin pick: least recently ranged peer, never-ranged first, ties to
/// the lowest id.
pub fn schedule_next(peers: &BTreeSet<NodeId>, last_ranged: &BTreeMap<NodeId, f64>) -> Option<NodeId> {
    peers
        .iter()
        .min_by(|a, b| {
            let ta = last_ranged.get(a).copied().unwrap_or(f64::NEG_INFINITY);
            let tb = last_ranged.get(b).copied().unwrap_or(f64::NEG_INFINITY);
            ta.total_cmp(&tb).then(a.cmp(b))
        })
        .copied()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum FrameKind {
    Poll = 0x10,
    Response = 0x11,
    Final = 0x12,
}

impl FrameKind {
    fn from_byte(b: u8) -> Option<Self> {
        match b {
            0x10 => Some(FrameKind::Poll),
            0x11 => Some(FrameKind::Response),
            0x12 => Some(FrameKind::Final),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub kind: FrameKind,
    pub src: NodeId,
    pub dst: NodeId,
    pub session: u32,
    /// 0 when the frame carries no payload.
    pub topic_id: u16,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FrameError {
    #[error("payload of {0} bytes exceeds the {MAX_PAYLOAD}-byte cap")]
    Oversize(usize),
    #[error("frame truncated: need {need} bytes, have {have}")]
    Truncated { need: usize, have: usize },
    #[error("unknown frame type {0:#04x}")]
    UnknownType(u8),
    #[error("length field {0} exceeds the payload cap")]
    BadLength(u8),
    #[error("{0} trailing bytes after frame")]
    Trailing(usize),
}

impl Frame {
    pub fn new(kind: FrameKind, src: NodeId, dst: NodeId, session: u32) -> Self {
        Self {
            kind,
            src,
            dst,
            session,
            topic_id: 0,
            payload: Vec::new(),
        }
    }

    pub fn with_payload(mut self, topic_id: u16, payload: Vec<u8>) -> Self {
        self.topic_id = topic_id;
        self.payload = payload;
        self
    }

    pub fn encode(&self) -> Result<Vec<u8>, FrameError> {
        if self.payload.len() > MAX_PAYLOAD {
            return Err(FrameError::Oversize(self.payload.len()));
        }
        let mut out = Vec::with_capacity(FRAME_HEADER_LEN + self.payload.len());
        out.push(self.kind as u8);
        out.extend_from_slice(&self.src.0.to_be_bytes());
        out.extend_from_slice(&self.dst.0.to_be_bytes());
        out.extend_from_slice(&self.session.to_be_bytes());
        out.push(self.payload.len() as u8);
        let topic = if self.payload.is_empty() { 0 } else { self.topic_id };
        out.extend_from_slice(&topic.to_be_bytes());
        out.extend_from_slice(&self.payload);
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, FrameError> {
        if bytes.len() < FRAME_HEADER_LEN {
            return Err(FrameError::Truncated {
                need: FRAME_HEADER_LEN,
                have: bytes.len(),
            });
        }
        let kind = FrameKind::from_byte(bytes[0]).ok_or(FrameError::UnknownType(bytes[0]))?;
        let len = bytes[9];
        if len as usize > MAX_PAYLOAD {
            return Err(FrameError::BadLength(len));
        }
        let need = FRAME_HEADER_LEN + len as usize;
        if bytes.len() < need {
            return Err(FrameError::Truncated {
                need,
                have: bytes.len(),
            });
        }
        if bytes.len() > need {
            return Err(FrameError::Trailing(bytes.len() - need));
        }
        Ok(Frame {
            kind,
            src: NodeId(u16::from_be_bytes([bytes[1], bytes[2]])),
            dst: NodeId(u16::from_be_bytes([bytes[3], bytes[4]])),
            session: u32::from_be_bytes([bytes[5], bytes[6], bytes[7], bytes[8]]),
            topic_id: u16::from_be_bytes([bytes[10], bytes[11]]),
            payload: bytes[FRAME_HEADER_LEN..].to_vec(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SessionState {
    Idle,
    PollSent,
    ResponseSent,
    FinalSent,
    Complete,
    Failed,
}

impl SessionState {
    fn can_advance_to(self, next: SessionState) -> bool {
        use SessionState::*;
        matches!(
            (self, next),
            (Idle, PollSent) | (PollSent, ResponseSent) | (ResponseSent, FinalSent) | (FinalSent, Complete)
        ) || (next == Failed && !matches!(self, Complete | Failed))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UwbTiming {
    pub turnaround_ns: f64,
    /// Half-width of the uniform jitter added to each turnaround.
    pub jitter_ns: f64,
    pub timeout_ns: f64,
}

impl Default for UwbTiming {
    fn default() -> Self {
        Self {
            turnaround_ns: 300_000.0,
            jitter_ns: 10_000.0,
            timeout_ns: 5_000_000.0,
        }
    }
}

impl UwbTiming {
    pub fn draw_turnaround<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.jitter_ns > 0.0 {
            self.turnaround_ns + rng.random_range(-self.jitter_ns..=self.jitter_ns)
        } else {
            self.turnaround_ns
        }
    }
}

/// One DS-TWR exchange and the local timestamps accumulated so far.
///
/// Both ends write into the same record; the kernel keeps it keyed by
/// `(initiator, session)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RangingSession {
    pub initiator: NodeId,
    pub responder: NodeId,
    pub session: u32,
    state: SessionState,
    // poll tx (A), poll rx (B), resp tx (B), resp rx (A), final tx (A), final rx (B)
    stamps: [Option<f64>; 6],
}

impl RangingSession {
    pub fn new(initiator: NodeId, responder: NodeId, session: u32) -> Self {
        Self {
            initiator,
            responder,
            session,
            state: SessionState::Idle,
            stamps: [None; 6],
        }
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    fn advance(&mut self, to: SessionState) -> Result<(), RangingError> {
        if !self.state.can_advance_to(to) {
            return Err(RangingError::IllegalTransition { from: self.state, to });
        }
        self.state = to;
        Ok(())
    }

    /// Poll leaves the initiator at session time 0.
    pub fn send_poll(&mut self, clock_a: &ClockModel) -> Result<(), RangingError> {
        self.advance(SessionState::PollSent)?;
        self.stamps[0] = Some(local_time(clock_a, 0.0));
        Ok(())
    }

    pub fn receive_poll(&mut self, clock_b: &ClockModel, rx_ns: f64) {
        self.stamps[1] = Some(local_time(clock_b, rx_ns));
    }

    pub fn send_response(&mut self, clock_b: &ClockModel, tx_ns: f64) -> Result<(), RangingError> {
        self.advance(SessionState::ResponseSent)?;
        self.stamps[2] = Some(local_time(clock_b, tx_ns));
        Ok(())
    }

    pub fn receive_response(&mut self, clock_a: &ClockModel, rx_ns: f64) {
        self.stamps[3] = Some(local_time(clock_a, rx_ns));
    }

    pub fn send_final(&mut self, clock_a: &ClockModel, tx_ns: f64) -> Result<(), RangingError> {
        self.advance(SessionState::FinalSent)?;
        self.stamps[4] = Some(local_time(clock_a, tx_ns));
        Ok(())
    }

    /// Records the final's arrival and completes the session, returning the
    /// estimated distance in meters.
    pub fn receive_final(&mut self, clock_b: &ClockModel, rx_ns: f64) -> Result<f64, RangingError> {
        self.stamps[5] = Some(local_time(clock_b, rx_ns));
        let ts = self.timestamps().ok_or(RangingError::Incomplete)?;
        let tof = ds_twr_tof(&ts)?;
        self.advance(SessionState::Complete)?;
        Ok(tof_to_distance(tof))
    }

    pub fn fail(&mut self) -> Result<(), RangingError> {
        self.advance(SessionState::Failed)
    }

    pub fn timestamps(&self) -> Option<RangingTimestamps> {
        let [t1, t2, t3, t4, t5, t6] = self.stamps;
        let (t1, t2, t3, t4, t5, t6) = (t1?, t2?, t3?, t4?, t5?, t6?);
        Some(RangingTimestamps {
            round_a: t4 - t1,
            reply_a: t5 - t4,
            round_b: t6 - t3,
            reply_b: t3 - t2,
        })
    }
}

/// Runs a full exchange without the event kernel: constant time of flight,
/// given true reply delays at B (`reply_b_ns`) and A (`reply_a_ns`).
pub fn simulate_exchange(
    clock_a: &ClockModel,
    clock_b: &ClockModel,
    tof_ns: f64,
    reply_a_ns: f64,
    reply_b_ns: f64,
) -> Result<(RangingTimestamps, f64), RangingError> {
    let mut s = RangingSession::new(NodeId(0), NodeId(1), 0);
    s.send_poll(clock_a)?;
    let poll_rx = tof_ns;
    s.receive_poll(clock_b, poll_rx);
    let resp_tx = poll_rx + reply_b_ns;
    s.send_response(clock_b, resp_tx)?;
    let resp_rx = resp_tx + tof_ns;
    s.receive_response(clock_a, resp_rx);
    let final_tx = resp_rx + reply_a_ns;
    s.send_final(clock_a, final_tx)?;
    let d = s.receive_final(clock_b, final_tx + tof_ns)?;
    Ok((s.timestamps().expect("complete"), d))
}

/// A completed range between two nodes, as held by one side.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeMeasurement {
    pub initiator: NodeId,
    pub responder: NodeId,
    pub distance: f64,
    pub t: f64,
    pub payload: Option<Vec<u8>>,
}
