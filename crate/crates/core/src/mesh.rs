//! Batman-style mesh layer.
//!
//! Every node periodically floods an originator message (OGM). Receivers
//! estimate a per-neighbor link quality (LQ) from the sequence numbers they
//! hear, scale the advertised transmit quality (TQ) by it, and keep the
//! neighbor offering the best TQ as next hop toward that originator. Only
//! the selected next hop's copy is re-flooded. Any originator heard this way
//! counts as a discovered peer.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::model::NodeId;

pub const TQ_MAX: u8 = 255;
pub const OGM_FRAME_TYPE: u8 = 0x01;
pub const OGM_FRAME_LEN: usize = 10;

/// Logistic distance falloff of the Wi-Fi link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkModel {
    /// Distance at which delivery probability is one half, meters.
    pub reference_range: f64,
    /// Width of the logistic transition, meters.
    pub falloff: f64,
}

impl Default for LinkModel {
    fn default() -> Self {
        Self {
            reference_range: 50.0,
            falloff: 5.0,
        }
    }
}

pub fn link_delivery_prob(model: &LinkModel, distance: f64, attenuation: f64) -> f64 {
    let p0 = 1.0 / (1.0 + ((distance - model.reference_range) / model.falloff).exp());
    p0 * (1.0 - attenuation.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Ogm {
    pub origin: NodeId,
    pub seqno: u32,
    pub tq: u8,
    pub ttl: u8,
    pub gateway: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OgmFrameError {
    #[error("OGM frame must be {OGM_FRAME_LEN} bytes, got {0}")]
    Length(usize),
    #[error("unexpected frame type {0:#04x}")]
    Type(u8),
}

impl Ogm {
    /// Big-endian: type, origin(2), seqno(4), tq, ttl, gateway flag.
    pub fn encode(&self) -> [u8; OGM_FRAME_LEN] {
        let mut b = [0u8; OGM_FRAME_LEN];
        b[0] = OGM_FRAME_TYPE;
        b[1..3].copy_from_slice(&self.origin.0.to_be_bytes());
        b[3..7].copy_from_slice(&self.seqno.to_be_bytes());
        b[7] = self.tq;
        b[8] = self.ttl;
        b[9] = self.gateway as u8;
        b
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, OgmFrameError> {
        if bytes.len() != OGM_FRAME_LEN {
            return Err(OgmFrameError::Length(bytes.len()));
        }
        if bytes[0] != OGM_FRAME_TYPE {
            return Err(OgmFrameError::Type(bytes[0]));
        }
        Ok(Ogm {
            origin: NodeId(u16::from_be_bytes([bytes[1], bytes[2]])),
            seqno: u32::from_be_bytes([bytes[3], bytes[4], bytes[5], bytes[6]]),
            tq: bytes[7],
            ttl: bytes[8],
            gateway: bytes[9] & 1 == 1,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshConfig {
    pub ogm_interval: f64,
    pub ttl: u8,
    pub window: u32,
    pub route_expiry: f64,
    pub peer_expiry: f64,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self {
            ogm_interval: 1.0,
            ttl: 16,
            window: 64,
            route_expiry: 10.0,
            peer_expiry: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Route {
    pub next_hop: NodeId,
    pub tq: u8,
    pub last_seen: OrderedSecs,
    /// Sequence number that last set or refreshed this route.
    pub seqno: u32,
}

/// Seconds wrapper with a total order, so routes compare with `Eq`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct OrderedSecs(pub f64);

impl Eq for OrderedSecs {}

/// Ring of the last `W` sequence numbers heard from one origin via one
/// neighbor.
#[derive(Debug, Clone, PartialEq, Eq)]
struct SeqWindow {
    first: u32,
    recent: VecDeque<u32>,
}

impl SeqWindow {
    fn contains(&self, s: u32) -> bool {
        self.recent.contains(&s)
    }

    fn record(&mut self, s: u32, cap: usize) {
        self.recent.push_back(s);
        while self.recent.len() > cap {
            // evict the oldest seqno
            let (idx, _) = self
                .recent
                .iter()
                .enumerate()
                .min_by_key(|(_, v)| **v)
                .expect("non-empty");
            self.recent.remove(idx);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
struct OriginState {
    route: Option<Route>,
    newest: u32,
    forwarded: Option<u32>,
    windows: BTreeMap<NodeId, SeqWindow>,
}

/// What happened to an incoming OGM.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OgmOutcome {
    /// Sequence number fell behind the window; ignored.
    Stale,
    /// Already heard this sequence number from this neighbor.
    Duplicate,
    /// Our own OGM echoed back.
    Own,
    Accepted {
        tq: u8,
        rebroadcast: Option<Ogm>,
    },
}

impl OgmOutcome {
    pub fn rebroadcast(&self) -> Option<Ogm> {
        match self {
            OgmOutcome::Accepted { rebroadcast, .. } => *rebroadcast,
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutingTable {
    owner: NodeId,
    window: u32,
    expiry: OrderedSecs,
    origins: BTreeMap<NodeId, OriginState>,
}

impl RoutingTable {
    pub fn new(owner: NodeId, cfg: &MeshConfig) -> Self {
        Self {
            owner,
            window: cfg.window.max(1),
            expiry: OrderedSecs(cfg.route_expiry),
            origins: BTreeMap::new(),
        }
    }

    pub fn owner(&self) -> NodeId {
        self.owner
    }

    fn is_live(&self, r: &Route, now: f64) -> bool {
        now - r.last_seen.0 <= self.expiry.0
    }

    /// Link quality toward `neighbor` as measured on `origin`'s OGMs,
    /// scaled to [0, 255].
    pub fn link_quality(&self, origin: NodeId, neighbor: NodeId) -> u8 {
        let Some(st) = self.origins.get(&origin) else {
            return 0;
        };
        let Some(w) = st.windows.get(&neighbor) else {
            return 0;
        };
        let lo = st.newest.saturating_sub(self.window - 1);
        let count = w.recent.iter().filter(|&&s| s >= lo && s <= st.newest).count() as u64;
        let span = (st.newest.saturating_sub(w.first) + 1).min(self.window) as u64;
        ((255 * count) / span).min(255) as u8
    }

    pub fn process_ogm(&mut self, ogm: &Ogm, from: NodeId, now: f64) -> OgmOutcome {
        if ogm.origin == self.owner {
            return OgmOutcome::Own;
        }
        let window = self.window;
        let expiry = self.expiry.0;
        let st = self.origins.entry(ogm.origin).or_default();
        let known = !st.windows.is_empty();
        if known && ogm.seqno as u64 + window as u64 <= st.newest as u64 {
            return OgmOutcome::Stale;
        }
        if st.windows.get(&from).is_some_and(|w| w.contains(ogm.seqno)) {
            return OgmOutcome::Duplicate;
        }
        st.newest = if known { st.newest.max(ogm.seqno) } else { ogm.seqno };
        st.windows
            .entry(from)
            .or_insert_with(|| SeqWindow {
                first: ogm.seqno,
                recent: VecDeque::new(),
            })
            .record(ogm.seqno, window as usize);

        let lq = self.link_quality(ogm.origin, from);
        let tq = ((ogm.tq as u32 * lq as u32) / 255) as u8;
        let st = self.origins.get_mut(&ogm.origin).expect("inserted above");
        let candidate = Route {
            next_hop: from,
            tq,
            last_seen: OrderedSecs(now),
            seqno: ogm.seqno,
        };
        let replace = match &st.route {
            None => true,
            Some(r) if now - r.last_seen.0 > expiry => true,
            Some(r) if r.next_hop == from => ogm.seqno >= r.seqno,
            Some(r) => tq > r.tq || (tq == r.tq && from < r.next_hop && ogm.seqno > r.seqno),
        };
        if replace {
            st.route = Some(candidate);
        }
        let via_best = st.route.as_ref().is_some_and(|r| r.next_hop == from);
        let fresh = st.forwarded.is_none_or(|f| ogm.seqno > f);
        let rebroadcast = if via_best && fresh && ogm.ttl > 0 {
            st.forwarded = Some(ogm.seqno);
            Some(Ogm {
                tq,
                ttl: ogm.ttl - 1,
                ..*ogm
            })
        } else {
            None
        };
        OgmOutcome::Accepted { tq, rebroadcast }
    }

    pub fn route(&self, dest: NodeId, now: f64) -> Option<Route> {
        self.origins
            .get(&dest)
            .and_then(|s| s.route)
            .filter(|r| self.is_live(r, now))
    }

    pub fn route_next_hop(&self, dest: NodeId, now: f64) -> Option<NodeId> {
        self.route(dest, now).map(|r| r.next_hop)
    }

    /// Live routes, keyed by destination.
    pub fn routes(&self, now: f64) -> BTreeMap<NodeId, Route> {
        self.origins
            .iter()
            .filter_map(|(id, s)| s.route.filter(|r| self.is_live(r, now)).map(|r| (*id, r)))
            .collect()
    }

    pub fn live_route_count(&self, now: f64) -> usize {
        self.routes(now).len()
    }

    /// Drops expired routes. Sequence windows are kept so a returning
    /// originator is not mistaken for a fresh one.
    pub fn purge(&mut self, now: f64) {
        let expiry = self.expiry.0;
        for st in self.origins.values_mut() {
            if st.route.is_some_and(|r| now - r.last_seen.0 > expiry) {
                st.route = None;
            }
        }
    }
}

pub fn route_next_hop(table: &RoutingTable, dest: NodeId, now: f64) -> Option<NodeId> {
    table.route_next_hop(dest, now)
}

/// Gateway with the best live route; ties go to the lowest id.
pub fn best_gateway(table: &RoutingTable, gateways: &BTreeSet<NodeId>, now: f64) -> Option<NodeId> {
    gateways
        .iter()
        .filter_map(|g| table.route(*g, now).map(|r| (r.tq, *g)))
        // max tq, then min id
        .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)))
        .map(|(_, g)| g)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peer {
    pub last_seen: f64,
    pub is_gateway: bool,
}

/// Nodes visible through the mesh. Stands in for middleware discovery.
#[derive(Debug, Clone, PartialEq)]
pub struct PeerTable {
    owner: NodeId,
    expiry: f64,
    peers: BTreeMap<NodeId, Peer>,
}

impl PeerTable {
    pub fn new(owner: NodeId, expiry: f64) -> Self {
        Self {
            owner,
            expiry,
            peers: BTreeMap::new(),
        }
    }

    pub fn observe(&mut self, id: NodeId, now: f64, is_gateway: bool) {
        if id == self.owner {
            return;
        }
        let p = self.peers.entry(id).or_insert(Peer {
            last_seen: now,
            is_gateway,
        });
        p.last_seen = p.last_seen.max(now);
        p.is_gateway = is_gateway;
    }

    /// Marks `id` seen without touching its gateway flag.
    pub fn touch(&mut self, id: NodeId, now: f64) {
        if id == self.owner {
            return;
        }
        self.peers
            .entry(id)
            .and_modify(|p| p.last_seen = p.last_seen.max(now))
            .or_insert(Peer {
                last_seen: now,
                is_gateway: false,
            });
    }

    pub fn get(&self, id: NodeId) -> Option<&Peer> {
        self.peers.get(&id)
    }

    pub fn discovered_peers(&self, now: f64) -> BTreeSet<NodeId> {
        discovered_peers(self, now)
    }

    pub fn gateways(&self, now: f64) -> BTreeSet<NodeId> {
        self.peers
            .iter()
            .filter(|(_, p)| p.is_gateway && p.last_seen >= now - self.expiry)
            .map(|(id, _)| *id)
            .collect()
    }

    pub fn purge(&mut self, now: f64) {
        let expiry = self.expiry;
        self.peers.retain(|_, p| p.last_seen >= now - expiry);
    }
}

pub fn discovered_peers(table: &PeerTable, now: f64) -> BTreeSet<NodeId> {
    table
        .peers
        .iter()
        .filter(|(_, p)| p.last_seen >= now - table.expiry)
        .map(|(id, _)| *id)
        .collect()
}
