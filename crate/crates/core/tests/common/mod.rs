#![allow(dead_code)]

use meshloc::bus::Transport;
use meshloc::scenario::{
    ChannelSpec, NodeSpec, ProtocolSpec, ScenarioFile, TopicSpec, WaypointSpec, WorldSpec, SCHEMA_VERSION,
};

pub fn node(id: u16, pos: [f64; 3], anchor: bool) -> NodeSpec {
    NodeSpec {
        id,
        waypoints: vec![WaypointSpec { t_s: 0.0, pos }],
        clock: Default::default(),
        is_gateway: false,
        is_anchor: anchor,
        has_altimeter: true,
        altimeter_sigma_m: 0.0,
    }
}

pub fn scenario(duration_s: f64, seed: u64, nodes: Vec<NodeSpec>) -> ScenarioFile {
    ScenarioFile {
        schema_version: SCHEMA_VERSION,
        description: None,
        duration_s,
        seed,
        world: WorldSpec::default(),
        channel: ChannelSpec::default(),
        protocol: ProtocolSpec::default(),
        nodes,
        topics: vec![],
    }
}

pub fn topic(name: &str, transport: Transport, publishers: &[u16], subscribers: &[u16]) -> TopicSpec {
    TopicSpec {
        name: name.into(),
        rate_limit: 0.0,
        burst: 1,
        transport,
        max_payload: if transport == Transport::Mesh { 1024 } else { 64 },
        publishers: publishers.to_vec(),
        subscribers: subscribers.to_vec(),
        publish_hz: 10.0,
        payload_len: 16,
        start_s: 3.0,
    }
}

/// Noiseless five-node geometry: anchors at (0,0), (10,0), (0,10); D at
/// (3,4); E at (6,6) out of UWB reach of A.
pub fn five_node(duration_s: f64, seed: u64, sigma: f64) -> ScenarioFile {
    let mut f = scenario(
        duration_s,
        seed,
        vec![
            node(1, [0.0, 0.0, 0.0], true),
            node(2, [10.0, 0.0, 0.0], true),
            node(3, [0.0, 10.0, 0.0], true),
            node(4, [3.0, 4.0, 0.0], false),
            node(5, [6.0, 6.0, 0.0], false),
        ],
    );
    f.channel.uwb.sigma_los_m = sigma;
    // keeps A-E (8.49 m) out of range while D-B (8.06 m) stays in so E must lean on D
    f.channel.uwb.max_range_m = 8.2;
    f
}
