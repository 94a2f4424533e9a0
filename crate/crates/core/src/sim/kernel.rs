//! The discrete-event simulation of a whole swarm.

use std::collections::{BTreeMap, BTreeSet};

use log::{debug, info, trace, warn};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::metrics::{windowed_rmse, Metric, MetricsReport, SeriesPoint, Summary, TopicSummary};
use super::queue::{EventQueue, PastEvent, SimTime};
use super::rng::{Purpose, RandomStreams};
use crate::bus::{transport_select, Announce, Message, NodeBus, PublishOutcome, TopicCounters, Transport};
use crate::loc::{propagate_localization, Altitude, CoordinateFrame, PositionEstimate, RangeGraph};
use crate::mesh::{link_delivery_prob, Ogm, OgmOutcome, PeerTable, RoutingTable, OGM_FRAME_LEN, TQ_MAX};
use crate::model::{NodeConfig, NodeId};
use crate::scenario::Scenario;
use crate::uwb::{measure_range, schedule_next, Frame, FrameKind, RangingSession, SessionState, SPEED_OF_LIGHT};

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    OgmEmit(NodeId),
    OgmArrive {
        to: NodeId,
        from: NodeId,
        frame: [u8; OGM_FRAME_LEN],
        announce: Vec<u8>,
    },
    RangingTick(NodeId),
    UwbFrameArrive {
        session: u32,
        frame: Vec<u8>,
    },
    SessionTimeout {
        session: u32,
    },
    PublishTick {
        topic: usize,
        publisher: NodeId,
    },
    MeshDataArrive {
        at: NodeId,
        dest: NodeId,
        msg: Message,
        hops: u8,
    },
    LocalizationTick,
    MetricsSample,
    InterferenceEdge {
        window: usize,
        start: bool,
    },
}

struct NodeRngs {
    link: ChaCha8Rng,
    jitter: ChaCha8Rng,
    uwb: ChaCha8Rng,
    turnaround: ChaCha8Rng,
    altimeter: ChaCha8Rng,
    bus: ChaCha8Rng,
}

impl NodeRngs {
    fn new(streams: &RandomStreams, id: NodeId) -> Self {
        Self {
            link: streams.stream(id, Purpose::MeshLink),
            jitter: streams.stream(id, Purpose::MeshJitter),
            uwb: streams.stream(id, Purpose::UwbChannel),
            turnaround: streams.stream(id, Purpose::Turnaround),
            altimeter: streams.stream(id, Purpose::Altimeter),
            bus: streams.stream(id, Purpose::Bus),
        }
    }
}

struct NodeState {
    cfg: NodeConfig,
    routing: RoutingTable,
    peers: PeerTable,
    bus: NodeBus,
    ogm_seqno: u32,
    last_ranged: BTreeMap<NodeId, f64>,
    sessions_started: u64,
    sessions_completed: u64,
    rng: NodeRngs,
}

// Times are relative to the poll transmission, in nanoseconds.
struct ActiveSession {
    record: RangingSession,
    start: SimTime,
    tof_ns: f64,
    poll_rx: f64,
    resp_tx: f64,
    final_tx: f64,
    // payloads riding the poll (initiator to responder) and the response
    carried: Vec<(NodeId, Message)>,
}

pub struct Simulation {
    scenario: Scenario,
    queue: EventQueue<EventKind>,
    nodes: BTreeMap<NodeId, NodeState>,
    sessions: BTreeMap<u32, ActiveSession>,
    next_session: u32,
    graph: RangeGraph,
    estimates: BTreeMap<NodeId, PositionEstimate>,
    counters: BTreeMap<u16, TopicCounters>,
    expected_copies: BTreeMap<u16, u64>,
    delivered_to: BTreeMap<u16, BTreeMap<NodeId, u64>>,
    series: Vec<SeriesPoint>,
    samples: usize,
    latency_sum_ns: f64,
    events: u64,
    horizon: SimTime,
}

impl Simulation {
    pub fn new(scenario: Scenario) -> Self {
        let streams = RandomStreams::new(scenario.seed);
        let topics: Vec<_> = scenario.topics.iter().map(|t| t.topic.clone()).collect();
        let mut nodes = BTreeMap::new();
        for cfg in &scenario.nodes {
            let mut bus = NodeBus::new(cfg.id, &topics, scenario.uwb_queue_depth);
            for plan in &scenario.topics {
                if plan.publishers.contains(&cfg.id) {
                    bus.advertise(plan.topic.id).expect("topic registered");
                }
                if plan.subscribers.contains(&cfg.id) {
                    bus.subscribe(plan.topic.id).expect("topic registered");
                }
            }
            nodes.insert(
                cfg.id,
                NodeState {
                    cfg: cfg.clone(),
                    routing: RoutingTable::new(cfg.id, &scenario.mesh),
                    peers: PeerTable::new(cfg.id, scenario.mesh.peer_expiry),
                    bus,
                    ogm_seqno: 0,
                    last_ranged: BTreeMap::new(),
                    sessions_started: 0,
                    sessions_completed: 0,
                    rng: NodeRngs::new(&streams, cfg.id),
                },
            );
        }
        let estimates = scenario
            .nodes
            .iter()
            .map(|n| (n.id, PositionEstimate::unlocalized()))
            .collect();
        let counters = scenario
            .topics
            .iter()
            .map(|t| (t.topic.id, TopicCounters::default()))
            .collect();
        let horizon = SimTime::from_secs(scenario.duration_s);
        let mut sim = Self {
            graph: RangeGraph::new(scenario.smoothing_window),
            scenario,
            queue: EventQueue::new(),
            nodes,
            sessions: BTreeMap::new(),
            next_session: 0,
            estimates,
            counters,
            expected_copies: BTreeMap::new(),
            delivered_to: BTreeMap::new(),
            series: Vec::new(),
            samples: 0,
            latency_sum_ns: 0.0,
            events: 0,
            horizon,
        };
        sim.schedule_initial();
        sim
    }

    fn schedule_initial(&mut self) {
        let ogm = self.scenario.mesh.ogm_interval;
        let ranging_period = (self.scenario.ranging_rate_hz > 0.0).then(|| 1.0 / self.scenario.ranging_rate_hz);
        let ids: Vec<NodeId> = self.nodes.keys().copied().collect();
        for id in &ids {
            let node = self.nodes.get_mut(id).expect("node");
            let ogm_offset = node.rng.jitter.random_range(0.0..0.1 * ogm);
            let ranging_offset = ranging_period.map(|p| node.rng.jitter.random_range(0.0..p));
            self.schedule_tick(SimTime::from_secs(ogm_offset), EventKind::OgmEmit(*id));
            if let Some(off) = ranging_offset {
                self.schedule_tick(SimTime::from_secs(off), EventKind::RangingTick(*id));
            }
        }
        for (i, plan) in self.scenario.topics.clone().iter().enumerate() {
            if plan.publish_hz <= 0.0 {
                continue;
            }
            for p in &plan.publishers {
                self.schedule_tick(
                    SimTime::from_secs(plan.start_s),
                    EventKind::PublishTick {
                        topic: i,
                        publisher: *p,
                    },
                );
            }
        }
        self.schedule_tick(
            SimTime::from_secs(self.scenario.localization_interval_s),
            EventKind::LocalizationTick,
        );
        self.schedule_sample(1);
        for (i, w) in self.scenario.world.interference_windows.clone().iter().enumerate() {
            self.schedule_tick(
                SimTime::from_secs(w.start_s),
                EventKind::InterferenceEdge { window: i, start: true },
            );
            self.schedule_tick(
                SimTime::from_secs(w.end_s),
                EventKind::InterferenceEdge {
                    window: i,
                    start: false,
                },
            );
        }
    }

    /// Periodic activity only happens strictly before the end of the run.
    fn schedule_tick(&mut self, t: SimTime, kind: EventKind) {
        if t < self.horizon {
            self.schedule(t, kind);
        }
    }

    fn schedule_sample(&mut self, k: u64) {
        let t = SimTime::from_secs(k as f64 / self.scenario.metrics_rate_hz);
        if t <= self.horizon {
            self.schedule(t, EventKind::MetricsSample);
        }
    }

    fn schedule(&mut self, t: SimTime, kind: EventKind) {
        enqueue(&mut self.queue, t, kind);
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn now(&self) -> SimTime {
        self.queue.now()
    }

    pub fn node_ids(&self) -> Vec<NodeId> {
        self.nodes.keys().copied().collect()
    }

    pub fn discovered_peers(&self, node: NodeId) -> BTreeSet<NodeId> {
        self.nodes
            .get(&node)
            .map(|n| n.peers.discovered_peers(self.now().as_secs()))
            .unwrap_or_default()
    }

    pub fn routing_table(&self, node: NodeId) -> Option<&RoutingTable> {
        self.nodes.get(&node).map(|n| &n.routing)
    }

    pub fn peer_table(&self, node: NodeId) -> Option<&PeerTable> {
        self.nodes.get(&node).map(|n| &n.peers)
    }

    pub fn bus(&self, node: NodeId) -> Option<&NodeBus> {
        self.nodes.get(&node).map(|n| &n.bus)
    }

    pub fn range_graph(&self) -> &RangeGraph {
        &self.graph
    }

    pub fn estimates(&self) -> &BTreeMap<NodeId, PositionEstimate> {
        &self.estimates
    }

    pub fn counters(&self, topic_id: u16) -> Option<&TopicCounters> {
        self.counters.get(&topic_id)
    }

    pub fn delivered_to(&self, topic_id: u16, node: NodeId) -> u64 {
        self.delivered_to
            .get(&topic_id)
            .and_then(|m| m.get(&node))
            .copied()
            .unwrap_or(0)
    }

    /// Processes every event with time `<= t`.
    pub fn run_until(&mut self, t: SimTime) {
        while let Some(next) = self.queue.peek_time() {
            if next > t {
                break;
            }
            let ev = self.queue.pop().expect("peeked");
            self.events += 1;
            self.dispatch(ev.kind);
        }
    }

    /// Runs to the end of the scenario and closes the books.
    pub fn run(mut self) -> MetricsReport {
        self.run_until(self.horizon);
        self.finish()
    }

    fn dispatch(&mut self, kind: EventKind) {
        let now = self.now();
        trace!("{now} {kind:?}");
        match kind {
            EventKind::OgmEmit(id) => self.on_ogm_emit(id),
            EventKind::OgmArrive {
                to,
                from,
                frame,
                announce,
            } => self.on_ogm_arrive(to, from, &frame, &announce),
            EventKind::RangingTick(id) => self.on_ranging_tick(id),
            EventKind::UwbFrameArrive { session, frame } => self.on_uwb_frame(session, &frame),
            EventKind::SessionTimeout { session } => self.on_session_timeout(session),
            EventKind::PublishTick { topic, publisher } => self.on_publish_tick(topic, publisher),
            EventKind::MeshDataArrive { at, dest, msg, hops } => {
                self.counters.get_mut(&msg.topic_id).expect("topic").in_flight -= 1;
                self.on_mesh_data(at, dest, msg, hops);
            }
            EventKind::LocalizationTick => self.on_localization_tick(),
            EventKind::MetricsSample => self.on_metrics_sample(),
            EventKind::InterferenceEdge { window, start } => {
                info!(
                    "{now} interference window {window} {}",
                    if start { "begins" } else { "ends" }
                );
            }
        }
    }

    fn link_ok(&mut self, from: NodeId, to: NodeId) -> bool {
        let t = self.now().as_secs();
        let a = self.nodes[&from].cfg.position_at(t);
        let b = self.nodes[&to].cfg.position_at(t);
        let att = self.scenario.world.attenuation_at(t, &a, &b);
        let p = link_delivery_prob(&self.scenario.link, a.distance(&b), att);
        let u: f64 = self.nodes.get_mut(&from).expect("node").rng.link.random();
        u < p
    }

    fn hop_latency(&self) -> SimTime {
        self.now().plus_secs(self.scenario.hop_latency_s)
    }

    fn broadcast_ogm(&mut self, from: NodeId, ogm: &Ogm, announce: &[u8]) {
        let frame = ogm.encode();
        let at = self.hop_latency();
        let ids: Vec<NodeId> = self.nodes.keys().copied().filter(|i| *i != from).collect();
        for to in ids {
            if self.link_ok(from, to) {
                self.schedule(
                    at,
                    EventKind::OgmArrive {
                        to,
                        from,
                        frame,
                        announce: announce.to_vec(),
                    },
                );
            }
        }
    }

    fn on_ogm_emit(&mut self, id: NodeId) {
        let now = self.now().as_secs();
        let ttl = self.scenario.mesh.ttl;
        let node = self.nodes.get_mut(&id).expect("node");
        node.routing.purge(now);
        node.peers.purge(now);
        let ogm = Ogm {
            origin: id,
            seqno: node.ogm_seqno,
            tq: TQ_MAX,
            ttl,
            gateway: node.cfg.is_gateway,
        };
        node.ogm_seqno = node.ogm_seqno.wrapping_add(1);
        let announce = match node.bus.announce().encode() {
            Ok(bytes) => bytes,
            Err(e) => {
                warn!("node {id}: announce not sent: {e}");
                Vec::new()
            }
        };
        self.broadcast_ogm(id, &ogm, &announce);
        let next = self.now().plus_secs(self.scenario.mesh.ogm_interval);
        self.schedule_tick(next, EventKind::OgmEmit(id));
    }

    fn on_ogm_arrive(&mut self, to: NodeId, from: NodeId, frame: &[u8], announce: &[u8]) {
        let now = self.now().as_secs();
        let ogm = match Ogm::decode(frame) {
            Ok(o) => o,
            Err(e) => {
                warn!("node {to}: dropping malformed OGM: {e}");
                return;
            }
        };
        let node = self.nodes.get_mut(&to).expect("node");
        node.peers.touch(from, now);
        if ogm.origin != to {
            node.peers.observe(ogm.origin, now, ogm.gateway);
        }
        let outcome = node.routing.process_ogm(&ogm, from, now);
        if matches!(outcome, OgmOutcome::Own) {
            return;
        }
        if !announce.is_empty() {
            match Announce::decode(announce) {
                Ok(a) if a.node == ogm.origin => node.bus.learn(&a, now),
                Ok(a) => warn!("node {to}: announce for {} rides OGM of {}", a.node, ogm.origin),
                Err(e) => warn!("node {to}: malformed announce: {e}"),
            }
        }
        if let Some(fwd) = outcome.rebroadcast() {
            self.broadcast_ogm(to, &fwd, announce);
        }
    }

    fn on_ranging_tick(&mut self, a: NodeId) {
        let now = self.now();
        let t = now.as_secs();
        let next = now.plus_secs(1.0 / self.scenario.ranging_rate_hz);
        self.schedule_tick(next, EventKind::RangingTick(a));

        let node = &self.nodes[&a];
        let peers: BTreeSet<NodeId> = node
            .peers
            .discovered_peers(t)
            .into_iter()
            .filter(|p| self.nodes.contains_key(p))
            .collect();
        let Some(b) = schedule_next(&peers, &node.last_ranged) else {
            return;
        };
        let sid = self.next_session;
        self.next_session = self.next_session.wrapping_add(1);

        let pos_b = self.nodes[&b].cfg.position_at(t);
        let node = self.nodes.get_mut(&a).expect("node");
        node.last_ranged.insert(b, t);
        node.sessions_started += 1;
        let pos_a = node.cfg.position_at(t);
        let measured = measure_range(
            &self.scenario.world,
            &self.scenario.uwb,
            &pos_a,
            &pos_b,
            &mut node.rng.uwb,
        );
        let mut record = RangingSession::new(a, b, sid);
        record.send_poll(&node.cfg.clock).expect("fresh session");
        let mut frame = Frame::new(FrameKind::Poll, a, b, sid);
        let mut carried = Vec::new();
        if let Some(msg) = node.bus.take_uwb(b) {
            frame = frame.with_payload(msg.topic_id, msg.payload.clone());
            carried.push((b, msg));
        }
        let timeout = now.plus_nanos(self.scenario.timing.timeout_ns.round() as u64);
        self.schedule(timeout, EventKind::SessionTimeout { session: sid });
        let tof_ns = measured.map_or(f64::NAN, |d| d / SPEED_OF_LIGHT);
        if measured.is_some() {
            let bytes = frame.encode().expect("queued payloads respect the cap");
            self.schedule(
                at_rel(now, tof_ns),
                EventKind::UwbFrameArrive {
                    session: sid,
                    frame: bytes,
                },
            );
        } else {
            debug!("{now} session {sid} {a}->{b}: poll lost (out of range)");
        }
        self.sessions.insert(
            sid,
            ActiveSession {
                record,
                start: now,
                tof_ns,
                poll_rx: tof_ns,
                resp_tx: f64::NAN,
                final_tx: f64::NAN,
                carried,
            },
        );
    }

    fn on_uwb_frame(&mut self, sid: u32, bytes: &[u8]) {
        let frame = match Frame::decode(bytes) {
            Ok(f) => f,
            Err(e) => {
                warn!("session {sid}: malformed UWB frame: {e}");
                return;
            }
        };
        let Some(s) = self.sessions.get_mut(&sid) else {
            return;
        };
        if s.record.state() == SessionState::Failed {
            return;
        }
        let (a, b) = (s.record.initiator, s.record.responder);
        match frame.kind {
            FrameKind::Poll => {
                let rb = self.nodes.get_mut(&b).expect("node");
                s.record.receive_poll(&rb.cfg.clock, s.poll_rx);
                s.resp_tx = s.poll_rx + self.scenario.timing.draw_turnaround(&mut rb.rng.turnaround);
                s.record
                    .send_response(&rb.cfg.clock, s.resp_tx)
                    .expect("poll precedes response");
                let mut resp = Frame::new(FrameKind::Response, b, a, sid);
                if let Some(msg) = rb.bus.take_uwb(a) {
                    resp = resp.with_payload(msg.topic_id, msg.payload.clone());
                    s.carried.push((a, msg));
                }
                let at = at_rel(s.start, s.resp_tx + s.tof_ns);
                let bytes = resp.encode().expect("queued payloads respect the cap");
                enqueue(
                    &mut self.queue,
                    at,
                    EventKind::UwbFrameArrive {
                        session: sid,
                        frame: bytes,
                    },
                );
            }
            FrameKind::Response => {
                let ra = self.nodes.get_mut(&a).expect("node");
                s.record.receive_response(&ra.cfg.clock, s.resp_tx + s.tof_ns);
                s.final_tx = s.resp_tx + s.tof_ns + self.scenario.timing.draw_turnaround(&mut ra.rng.turnaround);
                s.record
                    .send_final(&ra.cfg.clock, s.final_tx)
                    .expect("response precedes final");
                let at = at_rel(s.start, s.final_tx + s.tof_ns);
                let bytes = Frame::new(FrameKind::Final, a, b, sid).encode().expect("empty frame");
                enqueue(
                    &mut self.queue,
                    at,
                    EventKind::UwbFrameArrive {
                        session: sid,
                        frame: bytes,
                    },
                );
            }
            FrameKind::Final => {
                let clock_b = self.nodes[&b].cfg.clock;
                let final_rx = s.final_tx + s.tof_ns;
                let distance = match s.record.receive_final(&clock_b, final_rx) {
                    Ok(d) => d,
                    Err(e) => {
                        warn!("session {sid}: {e}");
                        return;
                    }
                };
                let carried = std::mem::take(&mut s.carried);
                let t = self.now().as_secs();
                self.latency_sum_ns += final_rx;
                self.graph.push(a, b, distance, t);
                self.nodes.get_mut(&a).expect("node").sessions_completed += 1;
                for (to, msg) in carried {
                    self.deliver(to, &msg);
                }
            }
        }
    }

    fn on_session_timeout(&mut self, sid: u32) {
        let Some(mut s) = self.sessions.remove(&sid) else {
            return;
        };
        if s.record.state() != SessionState::Complete {
            s.record.fail().expect("any state may fail");
            for (_, msg) in &s.carried {
                self.counters.get_mut(&msg.topic_id).expect("topic").dropped += 1;
            }
        }
    }

    fn deliver(&mut self, to: NodeId, msg: &Message) {
        let c = self.counters.get_mut(&msg.topic_id).expect("topic");
        if self.nodes.get_mut(&to).expect("node").bus.receive(msg) {
            c.delivered += 1;
            *self
                .delivered_to
                .entry(msg.topic_id)
                .or_default()
                .entry(to)
                .or_default() += 1;
        } else {
            c.dropped += 1;
        }
    }

    fn on_publish_tick(&mut self, topic_idx: usize, publisher: NodeId) {
        let now = self.now();
        let plan = &self.scenario.topics[topic_idx];
        let topic_id = plan.topic.id;
        let expiry = self.scenario.mesh.peer_expiry;
        let expected = plan.subscribers.iter().filter(|s| **s != publisher).count() as u64;
        let len = plan.payload_len;
        let next = now.plus_secs(1.0 / plan.publish_hz);
        self.schedule_tick(
            next,
            EventKind::PublishTick {
                topic: topic_idx,
                publisher,
            },
        );

        *self.expected_copies.entry(topic_id).or_default() += expected;
        let node = self.nodes.get_mut(&publisher).expect("node");
        let mut payload = vec![0u8; len];
        node.rng.bus.fill(&mut payload[..]);
        let publication = node
            .bus
            .publish(topic_id, payload, now.as_nanos(), expiry)
            .expect("scenario topics are registered");
        let counters = self.counters.get_mut(&topic_id).expect("topic");
        counters.record(publication.outcome);
        if publication.outcome != PublishOutcome::Accepted {
            debug!("{now} node {publisher} topic {topic_id}: {:?}", publication.outcome);
            return;
        }
        let msg = publication.message.expect("accepted publications carry a message");
        if publication.recipients.is_empty() {
            counters.unmatched += 1;
            return;
        }
        counters.dispatched += publication.recipients.len() as u64;
        let mut mesh = Vec::new();
        for to in publication.recipients {
            if publication.transport == Transport::UwbEmbedded {
                if let Some(evicted) = node.bus.enqueue_uwb(to, msg.clone()) {
                    debug!(
                        "node {publisher}: UWB queue to {to} full, dropped seqno {}",
                        evicted.seqno
                    );
                    counters.dropped += 1;
                }
            } else {
                mesh.push(to);
            }
        }
        for to in mesh {
            self.on_mesh_data(publisher, to, msg.clone(), 0);
        }
    }

    /// Hands a data message to `at`: delivers it if `at` is the destination,
    /// otherwise forwards one hop along the routing table.
    fn on_mesh_data(&mut self, at: NodeId, dest: NodeId, msg: Message, hops: u8) {
        if at == dest {
            self.deliver(dest, &msg);
            return;
        }
        let t = self.now().as_secs();
        let next = self.nodes[&at].routing.route_next_hop(dest, t);
        let counters = self.counters.get_mut(&msg.topic_id).expect("topic");
        let Some(next) = next.filter(|_| hops < self.scenario.mesh.ttl) else {
            counters.dropped += 1;
            return;
        };
        if !self.link_ok(at, next) {
            self.counters.get_mut(&msg.topic_id).expect("topic").dropped += 1;
            return;
        }
        self.counters.get_mut(&msg.topic_id).expect("topic").in_flight += 1;
        let when = self.hop_latency();
        self.schedule(
            when,
            EventKind::MeshDataArrive {
                at: next,
                dest,
                msg,
                hops: hops + 1,
            },
        );
    }

    fn on_localization_tick(&mut self) {
        let now = self.now();
        let t = now.as_secs();
        self.schedule_tick(
            now.plus_secs(self.scenario.localization_interval_s),
            EventKind::LocalizationTick,
        );
        self.graph.prune_older_than(t - self.scenario.mesh.peer_expiry);

        let mut seeds = BTreeSet::new();
        let mut estimates = BTreeMap::new();
        let mut altitudes = BTreeMap::new();
        for (id, node) in self.nodes.iter_mut() {
            let truth = node.cfg.position_at(t);
            if node.cfg.is_anchor {
                seeds.insert(*id);
                estimates.insert(*id, PositionEstimate::seed(truth, CoordinateFrame::Global));
                altitudes.insert(*id, Altitude { z: truth.z, sigma: 0.0 });
            } else {
                estimates.insert(*id, PositionEstimate::unlocalized());
                if node.cfg.has_altimeter {
                    let sigma = node.cfg.altimeter_sigma;
                    let noise = if sigma > 0.0 {
                        Normal::new(0.0, sigma)
                            .expect("finite sigma")
                            .sample(&mut node.rng.altimeter)
                    } else {
                        0.0
                    };
                    altitudes.insert(
                        *id,
                        Altitude {
                            z: truth.z + noise,
                            sigma,
                        },
                    );
                }
            }
        }
        self.estimates = propagate_localization(&self.graph, &estimates, &seeds, &altitudes, &self.scenario.solver);
        debug!(
            "{now} localized {}/{}",
            self.estimates.values().filter(|e| e.localized).count(),
            self.estimates.len()
        );
    }

    fn on_metrics_sample(&mut self) {
        let now = self.now();
        let t = now.as_secs();
        self.samples += 1;
        for (id, node) in &self.nodes {
            let est = self.estimates.get(id).filter(|e| e.localized);
            let err = est.map(|e| e.position.distance(&node.cfg.position_at(t)));
            let success =
                (node.sessions_started > 0).then(|| node.sessions_completed as f64 / node.sessions_started as f64);
            for (metric, value) in [
                (Metric::LocErrorM, err),
                (Metric::Localized, Some(if est.is_some() { 1.0 } else { 0.0 })),
                (Metric::Routes, Some(node.routing.live_route_count(t) as f64)),
                (Metric::RangingSuccess, success),
            ] {
                self.series.push(SeriesPoint {
                    time_ns: now.as_nanos(),
                    node: *id,
                    metric,
                    value,
                });
            }
        }
        self.schedule_sample(self.samples as u64 + 1);
    }

    /// Closes the books: queued UWB payloads count as dropped, frames still
    /// travelling stay in flight.
    pub fn finish(mut self) -> MetricsReport {
        for node in self.nodes.values() {
            for msg in node.bus.uwb_backlog() {
                self.counters.get_mut(&msg.topic_id).expect("topic").dropped += 1;
            }
        }
        for s in self.sessions.values() {
            for (_, msg) in &s.carried {
                self.counters.get_mut(&msg.topic_id).expect("topic").in_flight += 1;
            }
        }
        for (id, c) in &self.counters {
            if !c.is_conserved() {
                warn!("topic {id}: counters not conserved: {c:?}");
            }
        }

        let anchors: Vec<NodeId> = self
            .nodes
            .values()
            .filter(|n| n.cfg.is_anchor)
            .map(|n| n.cfg.id)
            .collect();
        let from = SimTime::from_secs(0.75 * self.scenario.duration_s).as_nanos();
        let rmse_m = windowed_rmse(&self.series, from, &anchors);
        let last_t = self.series.last().map(|p| p.time_ns);
        let final_loc_error_m = self
            .nodes
            .keys()
            .map(|id| {
                let v = self
                    .series
                    .iter()
                    .rev()
                    .take_while(|p| Some(p.time_ns) == last_t)
                    .find(|p| p.node == *id && p.metric == Metric::LocErrorM)
                    .and_then(|p| p.value);
                (id.0, v)
            })
            .collect();
        let started: u64 = self.nodes.values().map(|n| n.sessions_started).sum();
        let completed: u64 = self.nodes.values().map(|n| n.sessions_completed).sum();
        let topics = self
            .scenario
            .topics
            .iter()
            .map(|plan| {
                let id = plan.topic.id;
                let counters = self.counters[&id];
                let expected = self.expected_copies.get(&id).copied().unwrap_or(0);
                TopicSummary {
                    name: plan.topic.name.clone(),
                    id,
                    transport: if plan.topic.transport == Transport::Auto {
                        transport_select(&plan.topic, plan.payload_len)
                    } else {
                        plan.topic.transport
                    },
                    counters,
                    expected_copies: expected,
                    pdr: (expected > 0).then(|| counters.delivered as f64 / expected as f64),
                    delivered_by_subscriber: self
                        .delivered_to
                        .get(&id)
                        .map(|m| m.iter().map(|(n, c)| (n.0, *c)).collect())
                        .unwrap_or_default(),
                }
            })
            .collect();
        MetricsReport {
            summary: Summary {
                seed: self.scenario.seed,
                duration_s: self.scenario.duration_s,
                samples: self.samples,
                rmse_m,
                final_loc_error_m,
                ranging_sessions_started: started,
                ranging_sessions_completed: completed,
                mean_ranging_latency_s: (completed > 0).then(|| self.latency_sum_ns / completed as f64 / 1e9),
                topics,
                events_processed: self.events,
            },
            series: self.series,
        }
    }
}

fn enqueue(queue: &mut EventQueue<EventKind>, t: SimTime, kind: EventKind) {
    if let Err(PastEvent { at, now }) = queue.schedule(t, kind) {
        panic!("event scheduled in the past: {at} < {now}");
    }
}

fn at_rel(start: SimTime, rel_ns: f64) -> SimTime {
    start.plus_nanos(rel_ns.round().max(0.0) as u64)
}

/// Convenience: build and run a scenario to completion.
pub fn run(scenario: Scenario) -> MetricsReport {
    Simulation::new(scenario).run()
}
