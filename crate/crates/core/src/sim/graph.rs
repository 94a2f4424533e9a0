//! OGM flooding over an explicit adjacency, without geometry or loss.
//!
//! Every interval each node emits one OGM; copies propagate breadth-first
//! over the given links, so every hop costs the same. Useful for checking
//! route selection against graph algorithms.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::mesh::{MeshConfig, Ogm, PeerTable, RoutingTable, TQ_MAX};
use crate::model::NodeId;

#[derive(Debug, Clone)]
pub struct GraphMesh {
    cfg: MeshConfig,
    adjacency: BTreeMap<NodeId, BTreeSet<NodeId>>,
    tables: BTreeMap<NodeId, RoutingTable>,
    peers: BTreeMap<NodeId, PeerTable>,
    seqno: u32,
    now: f64,
}

impl GraphMesh {
    /// `edges` are undirected. Nodes without edges are still listed in
    /// `nodes`.
    pub fn new(nodes: &[NodeId], edges: &[(NodeId, NodeId)], cfg: MeshConfig) -> Self {
        let mut adjacency: BTreeMap<NodeId, BTreeSet<NodeId>> = nodes.iter().map(|n| (*n, BTreeSet::new())).collect();
        for &(a, b) in edges {
            if a != b {
                adjacency.entry(a).or_default().insert(b);
                adjacency.entry(b).or_default().insert(a);
            }
        }
        let tables = adjacency.keys().map(|n| (*n, RoutingTable::new(*n, &cfg))).collect();
        let peers = adjacency
            .keys()
            .map(|n| (*n, PeerTable::new(*n, cfg.peer_expiry)))
            .collect();
        Self {
            cfg,
            adjacency,
            tables,
            peers,
            seqno: 0,
            now: 0.0,
        }
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn neighbors(&self, node: NodeId) -> Option<&BTreeSet<NodeId>> {
        self.adjacency.get(&node)
    }

    /// One OGM round from every node, flooded to quiescence, then time
    /// advances by one interval.
    pub fn step(&mut self) {
        let mut queue: VecDeque<(NodeId, NodeId, Ogm)> = VecDeque::new();
        for (&origin, nbs) in &self.adjacency {
            let ogm = Ogm {
                origin,
                seqno: self.seqno,
                tq: TQ_MAX,
                ttl: self.cfg.ttl,
                gateway: false,
            };
            queue.extend(nbs.iter().map(|nb| (*nb, origin, ogm)));
        }
        while let Some((to, from, ogm)) = queue.pop_front() {
            let peers = self.peers.get_mut(&to).expect("node");
            peers.touch(from, self.now);
            if ogm.origin != to {
                peers.observe(ogm.origin, self.now, ogm.gateway);
            }
            let outcome = self
                .tables
                .get_mut(&to)
                .expect("node")
                .process_ogm(&ogm, from, self.now);
            if let Some(fwd) = outcome.rebroadcast() {
                queue.extend(self.adjacency[&to].iter().map(|nb| (*nb, to, fwd)));
            }
        }
        self.seqno += 1;
        self.now += self.cfg.ogm_interval;
    }

    pub fn run_intervals(&mut self, n: usize) {
        for _ in 0..n {
            self.step();
        }
    }

    pub fn table(&self, node: NodeId) -> Option<&RoutingTable> {
        self.tables.get(&node)
    }

    /// Routes are judged at the time of the last flood.
    pub fn next_hop(&self, node: NodeId, dest: NodeId) -> Option<NodeId> {
        let t = (self.now - self.cfg.ogm_interval).max(0.0);
        self.tables.get(&node)?.route_next_hop(dest, t)
    }

    pub fn discovered_peers(&self, node: NodeId) -> BTreeSet<NodeId> {
        let t = (self.now - self.cfg.ogm_interval).max(0.0);
        self.peers.get(&node).map(|p| p.discovered_peers(t)).unwrap_or_default()
    }
}
