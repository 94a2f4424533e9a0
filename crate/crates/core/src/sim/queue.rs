use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;

use serde::Serialize;

/// Simulated time in integer nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    /// Rounds to the nearest nanosecond; negative inputs clamp to zero.
    pub fn from_secs(s: f64) -> Self {
        SimTime((s * 1e9).round().max(0.0) as u64)
    }

    pub fn as_secs(self) -> f64 {
        self.0 as f64 / 1e9
    }

    pub fn as_nanos(self) -> u64 {
        self.0
    }

    pub fn plus_nanos(self, ns: u64) -> Self {
        SimTime(self.0 + ns)
    }

    pub fn plus_secs(self, s: f64) -> Self {
        self.plus_nanos((s * 1e9).round().max(0.0) as u64)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.9}s", self.as_secs())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("event scheduled at {at} but simulated time is already {now}")]
pub struct PastEvent {
    pub at: SimTime,
    pub now: SimTime,
}

#[derive(Debug, Clone)]
pub struct Scheduled<K> {
    pub t: SimTime,
    pub seq: u64,
    pub kind: K,
}

impl<K> PartialEq for Scheduled<K> {
    fn eq(&self, other: &Self) -> bool {
        self.t == other.t && self.seq == other.seq
    }
}

impl<K> Eq for Scheduled<K> {}

impl<K> PartialOrd for Scheduled<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<K> Ord for Scheduled<K> {
    // reversed: BinaryHeap is a max-heap and we pop the least (t, seq)
    fn cmp(&self, other: &Self) -> Ordering {
        (other.t, other.seq).cmp(&(self.t, self.seq))
    }
}

/// Min-queue over `(t, seq)`. Simultaneous events pop in insertion order.
#[derive(Debug)]
pub struct EventQueue<K> {
    heap: BinaryHeap<Scheduled<K>>,
    next_seq: u64,
    now: SimTime,
}

impl<K> Default for EventQueue<K> {
    fn default() -> Self {
        Self::new()
    }
}

impl<K> EventQueue<K> {
    pub fn new() -> Self {
        Self {
            heap: BinaryHeap::new(),
            next_seq: 0,
            now: SimTime::ZERO,
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn schedule(&mut self, t: SimTime, kind: K) -> Result<u64, PastEvent> {
        if t < self.now {
            return Err(PastEvent { at: t, now: self.now });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Scheduled { t, seq, kind });
        Ok(seq)
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|e| e.t)
    }

    /// Pops the least event and advances the clock to it.
    pub fn pop(&mut self) -> Option<Scheduled<K>> {
        let ev = self.heap.pop()?;
        debug_assert!(ev.t >= self.now);
        self.now = ev.t;
        Some(ev)
    }

    pub fn drain(&mut self) -> impl Iterator<Item = Scheduled<K>> + '_ {
        self.heap.drain()
    }
}
