//! Topic-based publish/subscribe over two transports: unicast through the
//! mesh for bulk data, or payloads embedded in UWB ranging frames for small
//! signals that should only reach ranging counterparts.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::model::NodeId;
use crate::uwb::MAX_PAYLOAD;

pub const ANNOUNCE_FRAME_TYPE: u8 = 0x02;
pub const MAX_TOPIC_NAME: usize = 48;
pub const DEFAULT_UWB_QUEUE_DEPTH: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transport {
    Mesh,
    UwbEmbedded,
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topic {
    pub name: String,
    pub id: u16,
    /// Messages per second; 0 disables throttling.
    pub rate_limit: f64,
    pub burst: u32,
    pub transport: Transport,
    pub max_payload: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Message {
    pub topic_id: u16,
    pub publisher: NodeId,
    pub seqno: u32,
    pub payload: Vec<u8>,
    /// Publish time in nanoseconds.
    pub t_publish_ns: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TokenBucket {
    pub rate: f64,
    pub burst: f64,
    pub tokens: f64,
    pub last_refill: f64,
}

impl TokenBucket {
    /// Starts full.
    pub fn new(rate: f64, burst: u32, now: f64) -> Self {
        let burst = burst.max(1) as f64;
        Self {
            rate,
            burst,
            tokens: burst,
            last_refill: now,
        }
    }

    pub fn throttle_check(&mut self, now: f64) -> bool {
        throttle_check(self, now)
    }
}

pub fn throttle_check(bucket: &mut TokenBucket, now: f64) -> bool {
    if bucket.rate <= 0.0 {
        return true;
    }
    let elapsed = (now - bucket.last_refill).max(0.0);
    bucket.tokens = (bucket.tokens + bucket.rate * elapsed).min(bucket.burst);
    bucket.last_refill = bucket.last_refill.max(now);
    if bucket.tokens >= 1.0 {
        bucket.tokens -= 1.0;
        true
    } else {
        false
    }
}

/// Resolves `Auto` by size: small payloads ride ranging frames.
pub fn transport_select(topic: &Topic, payload_len: usize) -> Transport {
    match topic.transport {
        Transport::Auto if payload_len <= MAX_PAYLOAD => Transport::UwbEmbedded,
        Transport::Auto => Transport::Mesh,
        t => t,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PublishOutcome {
    Accepted,
    Throttled,
    Oversize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BusError {
    #[error("topic {0} is not registered")]
    UnknownTopic(u16),
    #[error("announce frame truncated")]
    Truncated,
    #[error("unexpected announce frame type {0:#04x}")]
    Type(u8),
    #[error("{0} trailing bytes after announce frame")]
    Trailing(usize),
    #[error("announce lists {0} topics, more than fit in one frame")]
    TooManyTopics(usize),
}

pub const FLAG_SUBSCRIBER: u8 = 0b01;
pub const FLAG_PUBLISHER: u8 = 0b10;

/// Per-node topic roles, flooded alongside the node's OGM.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Announce {
    pub node: NodeId,
    pub entries: Vec<(u16, u8)>,
}

impl Announce {
    pub fn encode(&self) -> Result<Vec<u8>, BusError> {
        if self.entries.len() > u8::MAX as usize {
            return Err(BusError::TooManyTopics(self.entries.len()));
        }
        let mut out = Vec::with_capacity(4 + 3 * self.entries.len());
        out.push(ANNOUNCE_FRAME_TYPE);
        out.extend_from_slice(&self.node.0.to_be_bytes());
        out.push(self.entries.len() as u8);
        for (topic, flags) in &self.entries {
            out.extend_from_slice(&topic.to_be_bytes());
            out.push(*flags);
        }
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, BusError> {
        if bytes.len() < 4 {
            return Err(BusError::Truncated);
        }
        if bytes[0] != ANNOUNCE_FRAME_TYPE {
            return Err(BusError::Type(bytes[0]));
        }
        let n = bytes[3] as usize;
        let need = 4 + 3 * n;
        if bytes.len() < need {
            return Err(BusError::Truncated);
        }
        if bytes.len() > need {
            return Err(BusError::Trailing(bytes.len() - need));
        }
        let entries = bytes[4..]
            .chunks_exact(3)
            .map(|c| (u16::from_be_bytes([c[0], c[1]]), c[2]))
            .collect();
        Ok(Announce {
            node: NodeId(u16::from_be_bytes([bytes[1], bytes[2]])),
            entries,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SubscriptionHandle {
    pub node: NodeId,
    pub topic_id: u16,
}

/// Result of a publish call on one node.
#[derive(Debug, Clone, PartialEq)]
pub struct Publication {
    pub outcome: PublishOutcome,
    pub message: Option<Message>,
    pub transport: Transport,
    /// Subscribers this node currently knows about.
    pub recipients: Vec<NodeId>,
}

/// Bus state owned by a single node.
#[derive(Debug, Clone)]
pub struct NodeBus {
    node: NodeId,
    topics: BTreeMap<u16, Topic>,
    buckets: BTreeMap<u16, TokenBucket>,
    next_seqno: BTreeMap<u16, u32>,
    roles: BTreeMap<u16, u8>,
    // topic -> subscriber -> last announce time
    known_subscribers: BTreeMap<u16, BTreeMap<NodeId, f64>>,
    uwb_queues: BTreeMap<NodeId, VecDeque<Message>>,
    uwb_queue_depth: usize,
    delivered: BTreeSet<(NodeId, u16, u32)>,
}

impl NodeBus {
    pub fn new(node: NodeId, topics: &[Topic], uwb_queue_depth: usize) -> Self {
        let buckets = topics
            .iter()
            .map(|t| (t.id, TokenBucket::new(t.rate_limit, t.burst, 0.0)))
            .collect();
        Self {
            node,
            topics: topics.iter().map(|t| (t.id, t.clone())).collect(),
            buckets,
            next_seqno: BTreeMap::new(),
            roles: BTreeMap::new(),
            known_subscribers: BTreeMap::new(),
            uwb_queues: BTreeMap::new(),
            uwb_queue_depth: uwb_queue_depth.max(1),
            delivered: BTreeSet::new(),
        }
    }

    pub fn node(&self) -> NodeId {
        self.node
    }

    pub fn topic(&self, id: u16) -> Option<&Topic> {
        self.topics.get(&id)
    }

    pub fn subscribe(&mut self, topic_id: u16) -> Result<SubscriptionHandle, BusError> {
        if !self.topics.contains_key(&topic_id) {
            return Err(BusError::UnknownTopic(topic_id));
        }
        *self.roles.entry(topic_id).or_default() |= FLAG_SUBSCRIBER;
        Ok(SubscriptionHandle {
            node: self.node,
            topic_id,
        })
    }

    pub fn advertise(&mut self, topic_id: u16) -> Result<(), BusError> {
        if !self.topics.contains_key(&topic_id) {
            return Err(BusError::UnknownTopic(topic_id));
        }
        *self.roles.entry(topic_id).or_default() |= FLAG_PUBLISHER;
        Ok(())
    }

    pub fn is_subscribed(&self, topic_id: u16) -> bool {
        self.roles.get(&topic_id).is_some_and(|f| f & FLAG_SUBSCRIBER != 0)
    }

    pub fn announce(&self) -> Announce {
        Announce {
            node: self.node,
            entries: self.roles.iter().map(|(t, f)| (*t, *f)).collect(),
        }
    }

    /// Records another node's announced roles.
    pub fn learn(&mut self, announce: &Announce, now: f64) {
        if announce.node == self.node {
            return;
        }
        for subs in self.known_subscribers.values_mut() {
            subs.remove(&announce.node);
        }
        for (topic, flags) in &announce.entries {
            if flags & FLAG_SUBSCRIBER != 0 && self.topics.contains_key(topic) {
                self.known_subscribers
                    .entry(*topic)
                    .or_default()
                    .insert(announce.node, now);
            }
        }
    }

    pub fn known_subscribers(&self, topic_id: u16, now: f64, expiry: f64) -> Vec<NodeId> {
        self.known_subscribers
            .get(&topic_id)
            .map(|m| {
                m.iter()
                    .filter(|(_, seen)| now - **seen <= expiry)
                    .map(|(id, _)| *id)
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn publish(
        &mut self,
        topic_id: u16,
        payload: Vec<u8>,
        now_ns: u64,
        discovery_expiry: f64,
    ) -> Result<Publication, BusError> {
        let topic = self.topics.get(&topic_id).ok_or(BusError::UnknownTopic(topic_id))?;
        let transport = transport_select(topic, payload.len());
        let now = now_ns as f64 / 1e9;
        let rejected = |outcome| Publication {
            outcome,
            message: None,
            transport,
            recipients: Vec::new(),
        };
        if payload.len() > topic.max_payload {
            return Ok(rejected(PublishOutcome::Oversize));
        }
        let bucket = self.buckets.get_mut(&topic_id).expect("bucket per topic");
        if !throttle_check(bucket, now) {
            return Ok(rejected(PublishOutcome::Throttled));
        }
        let seq = self.next_seqno.entry(topic_id).or_default();
        let message = Message {
            topic_id,
            publisher: self.node,
            seqno: *seq,
            payload,
            t_publish_ns: now_ns,
        };
        *seq += 1;
        Ok(Publication {
            outcome: PublishOutcome::Accepted,
            message: Some(message),
            transport,
            recipients: self.known_subscribers(topic_id, now, discovery_expiry),
        })
    }

    /// Queues a payload for the next ranging session with `peer`. Returns
    /// the message evicted to make room, if any.
    pub fn enqueue_uwb(&mut self, peer: NodeId, msg: Message) -> Option<Message> {
        let q = self.uwb_queues.entry(peer).or_default();
        q.push_back(msg);
        if q.len() > self.uwb_queue_depth {
            q.pop_front()
        } else {
            None
        }
    }

    pub fn take_uwb(&mut self, peer: NodeId) -> Option<Message> {
        self.uwb_queues.get_mut(&peer).and_then(|q| q.pop_front())
    }

    pub fn uwb_backlog(&self) -> impl Iterator<Item = &Message> {
        self.uwb_queues.values().flatten()
    }

    /// Accepts an inbound message. `false` for duplicates or topics this
    /// node does not subscribe to.
    pub fn receive(&mut self, msg: &Message) -> bool {
        if !self.is_subscribed(msg.topic_id) {
            return false;
        }
        self.delivered.insert((msg.publisher, msg.topic_id, msg.seqno))
    }
}

/// Per-topic accounting. Two identities hold at the end of a run:
/// `published = accepted + throttled + oversize` over messages, and
/// `dispatched = delivered + in_flight + dropped` over per-subscriber copies.
/// `unmatched` counts accepted messages with no known subscriber.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct TopicCounters {
    pub published: u64,
    pub accepted: u64,
    pub throttled: u64,
    pub oversize: u64,
    pub unmatched: u64,
    pub dispatched: u64,
    pub delivered: u64,
    pub in_flight: u64,
    pub dropped: u64,
}

impl TopicCounters {
    pub fn record(&mut self, outcome: PublishOutcome) {
        self.published += 1;
        match outcome {
            PublishOutcome::Accepted => self.accepted += 1,
            PublishOutcome::Throttled => self.throttled += 1,
            PublishOutcome::Oversize => self.oversize += 1,
        }
    }

    pub fn is_conserved(&self) -> bool {
        self.published == self.accepted + self.throttled + self.oversize
            && self.dispatched == self.delivered + self.in_flight + self.dropped
    }
}
