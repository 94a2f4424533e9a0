//! Scenario files: JSON schema, validation and conversion into the runtime
//! model the simulator consumes.
//!
//! Unknown keys are rejected. Semantic checks run over the whole file and
//! report every violation at once.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bus::{Topic, Transport, MAX_TOPIC_NAME};
use crate::loc::{SolveMode, SolverConfig};
use crate::mesh::{LinkModel, MeshConfig};
use crate::model::{
    Aabb, ClockModel, InterferenceWindow, NodeConfig, NodeId, Position, Trajectory, Waypoint, World, MAX_DRIFT_PPM,
};
use crate::uwb::{UwbChannel, UwbTiming, MAX_PAYLOAD};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub duration_s: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub world: WorldSpec,
    #[serde(default)]
    pub channel: ChannelSpec,
    #[serde(default)]
    pub protocol: ProtocolSpec,
    pub nodes: Vec<NodeSpec>,
    #[serde(default)]
    pub topics: Vec<TopicSpec>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorldSpec {
    pub obstacles: Vec<BoxSpec>,
    pub interference_windows: Vec<InterferenceSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl From<BoxSpec> for Aabb {
    fn from(b: BoxSpec) -> Self {
        Aabb::new(b.min.into(), b.max.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterferenceSpec {
    pub start_s: f64,
    pub end_s: f64,
    pub region: BoxSpec,
    pub attenuation: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSpec {
    pub link: LinkSpec,
    pub uwb: UwbSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkSpec {
    pub reference_range_m: f64,
    pub falloff_m: f64,
    /// Per-hop latency of mesh frames.
    pub hop_latency_ms: f64,
}

impl Default for LinkSpec {
    fn default() -> Self {
        let m = LinkModel::default();
        Self {
            reference_range_m: m.reference_range,
            falloff_m: m.falloff,
            hop_latency_ms: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UwbSpec {
    pub sigma_los_m: f64,
    pub nlos_bias_mean_m: f64,
    pub max_range_m: f64,
}

impl Default for UwbSpec {
    fn default() -> Self {
        let c = UwbChannel::default();
        Self {
            sigma_los_m: c.sigma_los,
            nlos_bias_mean_m: c.nlos_bias_mean,
            max_range_m: c.max_range,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolSpec {
    pub ogm_interval_s: f64,
    pub ogm_ttl: u8,
    pub seqno_window: u32,
    pub route_expiry_s: f64,
    pub peer_expiry_s: f64,
    pub ranging_rate_hz: f64,
    pub turnaround_us: f64,
    pub turnaround_jitter_us: f64,
    pub session_timeout_ms: f64,
    pub localization_interval_s: f64,
    pub localization_mode: SolveMode,
    pub smoothing_window: usize,
    pub metrics_rate_hz: f64,
    pub uwb_queue_depth: usize,
}

impl Default for ProtocolSpec {
    fn default() -> Self {
        let mesh = MeshConfig::default();
        let t = UwbTiming::default();
        Self {
            ogm_interval_s: mesh.ogm_interval,
            ogm_ttl: mesh.ttl,
            seqno_window: mesh.window,
            route_expiry_s: mesh.route_expiry,
            peer_expiry_s: mesh.peer_expiry,
            ranging_rate_hz: 10.0,
            turnaround_us: t.turnaround_ns / 1e3,
            turnaround_jitter_us: t.jitter_ns / 1e3,
            session_timeout_ms: t.timeout_ns / 1e6,
            localization_interval_s: 1.0,
            localization_mode: SolveMode::Planar2D,
            smoothing_window: 5,
            metrics_rate_hz: 10.0,
            uwb_queue_depth: crate::bus::DEFAULT_UWB_QUEUE_DEPTH,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaypointSpec {
    pub t_s: f64,
    pub pos: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClockSpec {
    pub offset_ns: f64,
    pub drift_ppm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: u16,
    pub waypoints: Vec<WaypointSpec>,
    #[serde(default)]
    pub clock: ClockSpec,
    #[serde(default)]
    pub is_gateway: bool,
    #[serde(default)]
    pub is_anchor: bool,
    #[serde(default)]
    pub has_altimeter: bool,
    #[serde(default)]
    pub altimeter_sigma_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopicSpec {
    pub name: String,
    #[serde(default)]
    pub rate_limit: f64,
    #[serde(default = "one")]
    pub burst: u32,
    #[serde(default = "auto")]
    pub transport: Transport,
    #[serde(default = "default_max_payload")]
    pub max_payload: usize,
    #[serde(default)]
    pub publishers: Vec<u16>,
    #[serde(default)]
    pub subscribers: Vec<u16>,
    /// Rate at which each publisher emits a message; 0 for none.
    #[serde(default)]
    pub publish_hz: f64,
    #[serde(default = "default_payload_len")]
    pub payload_len: usize,
    #[serde(default)]
    pub start_s: f64,
}

fn one() -> u32 {
    1
}
fn auto() -> Transport {
    Transport::Auto
}
fn default_max_payload() -> usize {
    MAX_PAYLOAD
}
fn default_payload_len() -> usize {
    16
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported schema_version {0} (expected {SCHEMA_VERSION})")]
    SchemaVersion(u32),
    #[error("{field} must be {requirement}, got {value}")]
    OutOfRange {
        field: String,
        requirement: &'static str,
        value: f64,
    },
    #[error("scenario has no nodes")]
    NoNodes,
    #[error("duplicate node id {0}")]
    DuplicateNode(u16),
    #[error("more than one gateway: {0:?}")]
    MultipleGateways(Vec<u16>),
    #[error("node {node}: {message}")]
    Trajectory { node: u16, message: String },
    #[error("topic '{topic}' lists nonexistent {role} node {id}")]
    DanglingReference { topic: String, role: &'static str, id: u16 },
    #[error("duplicate topic name '{0}'")]
    DuplicateTopic(String),
    #[error("topic name '{0}' is empty or longer than {MAX_TOPIC_NAME} bytes")]
    TopicName(String),
    #[error("topic '{0}' rides UWB frames but max_payload exceeds {MAX_PAYLOAD} bytes")]
    UwbPayloadCap(String),
    #[error("too many topics ({0}); ids are 16-bit")]
    TooManyTopics(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationErrors(pub Vec<ScenarioError>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationErrors {}

#[derive(Debug, Clone, PartialEq)]
pub struct Validated {
    pub file: ScenarioFile,
    pub warnings: Vec<String>,
}

pub fn validate(bytes: &[u8]) -> Result<Validated, ValidationErrors> {
    let file: ScenarioFile = serde_json::from_slice(bytes).map_err(|e| {
        ValidationErrors(vec![ScenarioError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }])
    })?;
    let warnings = file.check().map_err(ValidationErrors)?;
    Ok(Validated { file, warnings })
}

impl ScenarioFile {
    pub fn from_json(bytes: &[u8]) -> Result<Self, ValidationErrors> {
        validate(bytes).map(|v| v.file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Semantic checks. Returns warnings on success.
    pub fn check(&self) -> Result<Vec<String>, Vec<ScenarioError>> {
        let mut errs = Vec::new();
        let mut warnings = Vec::new();
        let mut range = |field: &str, ok: bool, requirement: &'static str, value: f64| {
            if !ok {
                errs.push(ScenarioError::OutOfRange {
                    field: field.to_string(),
                    requirement,
                    value,
                });
            }
        };

        let p = &self.protocol;
        let c = &self.channel;
        range(
            "duration_s",
            self.duration_s >= 0.0 && self.duration_s.is_finite(),
            "finite and >= 0",
            self.duration_s,
        );
        range(
            "channel.link.reference_range_m",
            c.link.reference_range_m > 0.0,
            "> 0",
            c.link.reference_range_m,
        );
        range(
            "channel.link.falloff_m",
            c.link.falloff_m > 0.0,
            "> 0",
            c.link.falloff_m,
        );
        range(
            "channel.link.hop_latency_ms",
            c.link.hop_latency_ms >= 0.0,
            ">= 0",
            c.link.hop_latency_ms,
        );
        range(
            "channel.uwb.sigma_los_m",
            c.uwb.sigma_los_m >= 0.0,
            ">= 0",
            c.uwb.sigma_los_m,
        );
        range(
            "channel.uwb.nlos_bias_mean_m",
            c.uwb.nlos_bias_mean_m >= 0.0,
            ">= 0",
            c.uwb.nlos_bias_mean_m,
        );
        range(
            "channel.uwb.max_range_m",
            c.uwb.max_range_m > 0.0,
            "> 0",
            c.uwb.max_range_m,
        );
        range(
            "protocol.ogm_interval_s",
            p.ogm_interval_s > 0.0,
            "> 0",
            p.ogm_interval_s,
        );
        range(
            "protocol.seqno_window",
            p.seqno_window >= 1,
            ">= 1",
            p.seqno_window as f64,
        );
        range(
            "protocol.route_expiry_s",
            p.route_expiry_s > 0.0,
            "> 0",
            p.route_expiry_s,
        );
        range("protocol.peer_expiry_s", p.peer_expiry_s > 0.0, "> 0", p.peer_expiry_s);
        range(
            "protocol.ranging_rate_hz",
            p.ranging_rate_hz >= 0.0,
            ">= 0",
            p.ranging_rate_hz,
        );
        range("protocol.turnaround_us", p.turnaround_us > 0.0, "> 0", p.turnaround_us);
        range(
            "protocol.turnaround_jitter_us",
            p.turnaround_jitter_us >= 0.0 && p.turnaround_jitter_us < p.turnaround_us,
            ">= 0 and below turnaround_us",
            p.turnaround_jitter_us,
        );
        range(
            "protocol.session_timeout_ms",
            p.session_timeout_ms > 0.0,
            "> 0",
            p.session_timeout_ms,
        );
        range(
            "protocol.localization_interval_s",
            p.localization_interval_s > 0.0,
            "> 0",
            p.localization_interval_s,
        );
        range(
            "protocol.smoothing_window",
            p.smoothing_window >= 1,
            ">= 1",
            p.smoothing_window as f64,
        );
        range(
            "protocol.metrics_rate_hz",
            p.metrics_rate_hz > 0.0,
            "> 0",
            p.metrics_rate_hz,
        );
        range(
            "protocol.uwb_queue_depth",
            p.uwb_queue_depth >= 1,
            ">= 1",
            p.uwb_queue_depth as f64,
        );

        for (i, o) in self.world.obstacles.iter().enumerate() {
            if !Aabb::from(*o).is_valid() {
                errs.push(ScenarioError::OutOfRange {
                    field: format!("world.obstacles[{i}]"),
                    requirement: "a box with max >= min",
                    value: f64::NAN,
                });
            }
        }
        for (i, w) in self.world.interference_windows.iter().enumerate() {
            if !Aabb::from(w.region).is_valid() {
                errs.push(ScenarioError::OutOfRange {
                    field: format!("world.interference_windows[{i}].region"),
                    requirement: "a box with max >= min",
                    value: f64::NAN,
                });
            }
            if !(0.0..=1.0).contains(&w.attenuation) {
                errs.push(ScenarioError::OutOfRange {
                    field: format!("world.interference_windows[{i}].attenuation"),
                    requirement: "in [0, 1]",
                    value: w.attenuation,
                });
            }
            if w.end_s.is_nan() || w.end_s < w.start_s {
                errs.push(ScenarioError::OutOfRange {
                    field: format!("world.interference_windows[{i}].end_s"),
                    requirement: ">= start_s",
                    value: w.end_s,
                });
            }
        }

        if self.nodes.is_empty() {
            errs.push(ScenarioError::NoNodes);
        }
        let mut ids = BTreeSet::new();
        for n in &self.nodes {
            if !ids.insert(n.id) {
                errs.push(ScenarioError::DuplicateNode(n.id));
            }
            if let Err(e) = n.trajectory() {
                errs.push(ScenarioError::Trajectory {
                    node: n.id,
                    message: e.to_string(),
                });
            }
            if n.clock.drift_ppm.is_nan() || n.clock.drift_ppm.abs() > MAX_DRIFT_PPM || !n.clock.offset_ns.is_finite() {
                errs.push(ScenarioError::OutOfRange {
                    field: format!("nodes[id={}].clock.drift_ppm", n.id),
                    requirement: "within +/-100 ppm",
                    value: n.clock.drift_ppm,
                });
            }
            if n.altimeter_sigma_m.is_nan() || n.altimeter_sigma_m < 0.0 {
                errs.push(ScenarioError::OutOfRange {
                    field: format!("nodes[id={}].altimeter_sigma_m", n.id),
                    requirement: ">= 0",
                    value: n.altimeter_sigma_m,
                });
            }
        }
        let gateways: Vec<u16> = self.nodes.iter().filter(|n| n.is_gateway).map(|n| n.id).collect();
        if gateways.len() > 1 {
            errs.push(ScenarioError::MultipleGateways(gateways));
        }

        if self.topics.len() >= u16::MAX as usize {
            errs.push(ScenarioError::TooManyTopics(self.topics.len()));
        }
        let mut names = BTreeSet::new();
        for t in &self.topics {
            if t.name.is_empty() || t.name.len() > MAX_TOPIC_NAME {
                errs.push(ScenarioError::TopicName(t.name.clone()));
            }
            if !names.insert(t.name.as_str()) {
                errs.push(ScenarioError::DuplicateTopic(t.name.clone()));
            }
            if t.transport == Transport::UwbEmbedded && t.max_payload > MAX_PAYLOAD {
                errs.push(ScenarioError::UwbPayloadCap(t.name.clone()));
            }
            for (role, list) in [("publisher", &t.publishers), ("subscriber", &t.subscribers)] {
                for id in list {
                    if !ids.contains(id) {
                        errs.push(ScenarioError::DanglingReference {
                            topic: t.name.clone(),
                            role,
                            id: *id,
                        });
                    }
                }
            }
            for (field, v, ok) in [
                ("rate_limit", t.rate_limit, t.rate_limit >= 0.0),
                ("burst", t.burst as f64, t.burst >= 1),
                ("publish_hz", t.publish_hz, t.publish_hz >= 0.0),
                ("start_s", t.start_s, t.start_s >= 0.0),
            ] {
                if !ok {
                    errs.push(ScenarioError::OutOfRange {
                        field: format!("topics['{}'].{field}", t.name),
                        requirement: ">= 0 (burst >= 1)",
                        value: v,
                    });
                }
            }
        }

        let k = self.protocol.localization_mode.min_anchors();
        let anchors = self.nodes.iter().filter(|n| n.is_anchor).count();
        let unknowns = self.nodes.len() - anchors;
        if unknowns > 0 && anchors < k {
            warnings.push(format!(
                "only {anchors} anchor(s) for {:?} localization (need {k}); localization metrics will stay empty",
                self.protocol.localization_mode
            ));
        }

        if errs.is_empty() {
            Ok(warnings)
        } else {
            Err(errs)
        }
    }

    /// Runtime model. Call after `check` succeeded.
    pub fn build(&self) -> Result<Scenario, ValidationErrors> {
        self.check().map_err(ValidationErrors)?;
        let world = World {
            obstacles: self.world.obstacles.iter().map(|b| (*b).into()).collect(),
            interference_windows: self
                .world
                .interference_windows
                .iter()
                .map(|w| InterferenceWindow {
                    start_s: w.start_s,
                    end_s: w.end_s,
                    region: w.region.into(),
                    attenuation: w.attenuation,
                })
                .collect(),
        };
        let mut nodes: Vec<NodeConfig> = self
            .nodes
            .iter()
            .map(|n| NodeConfig {
                id: NodeId(n.id),
                trajectory: n.trajectory().expect("checked"),
                clock: ClockModel {
                    offset_ns: n.clock.offset_ns,
                    drift_ppm: n.clock.drift_ppm,
                },
                is_gateway: n.is_gateway,
                is_anchor: n.is_anchor,
                has_altimeter: n.has_altimeter,
                altimeter_sigma: n.altimeter_sigma_m,
            })
            .collect();
        nodes.sort_by_key(|n| n.id);
        let topics = self
            .topics
            .iter()
            .enumerate()
            .map(|(i, t)| TopicPlan {
                topic: Topic {
                    name: t.name.clone(),
                    // dense, file order, 0 reserved for "no payload"
                    id: i as u16 + 1,
                    rate_limit: t.rate_limit,
                    burst: t.burst,
                    transport: t.transport,
                    max_payload: t.max_payload,
                },
                publishers: t.publishers.iter().map(|&i| NodeId(i)).collect(),
                subscribers: t.subscribers.iter().map(|&i| NodeId(i)).collect(),
                publish_hz: t.publish_hz,
                payload_len: t.payload_len,
                start_s: t.start_s,
            })
            .collect();
        let p = &self.protocol;
        Ok(Scenario {
            duration_s: self.duration_s,
            seed: self.seed,
            world,
            link: LinkModel {
                reference_range: self.channel.link.reference_range_m,
                falloff: self.channel.link.falloff_m,
            },
            hop_latency_s: self.channel.link.hop_latency_ms / 1e3,
            uwb: UwbChannel {
                sigma_los: self.channel.uwb.sigma_los_m,
                nlos_bias_mean: self.channel.uwb.nlos_bias_mean_m,
                max_range: self.channel.uwb.max_range_m,
            },
            mesh: MeshConfig {
                ogm_interval: p.ogm_interval_s,
                ttl: p.ogm_ttl,
                window: p.seqno_window,
                route_expiry: p.route_expiry_s,
                peer_expiry: p.peer_expiry_s,
            },
            timing: UwbTiming {
                turnaround_ns: p.turnaround_us * 1e3,
                jitter_ns: p.turnaround_jitter_us * 1e3,
                timeout_ns: p.session_timeout_ms * 1e6,
            },
            ranging_rate_hz: p.ranging_rate_hz,
            localization_interval_s: p.localization_interval_s,
            solver: SolverConfig {
                mode: p.localization_mode,
                ..SolverConfig::default()
            },
            smoothing_window: p.smoothing_window,
            metrics_rate_hz: p.metrics_rate_hz,
            uwb_queue_depth: p.uwb_queue_depth,
            nodes,
            topics,
        })
    }

    /// A small documented swarm used by `meshloc example`.
    pub fn example() -> Self {
        let node = |id: u16, pts: &[(f64, [f64; 3])], anchor: bool, gateway: bool| NodeSpec {
            id,
            waypoints: pts.iter().map(|&(t_s, pos)| WaypointSpec { t_s, pos }).collect(),
            clock: ClockSpec {
                offset_ns: 1000.0 * id as f64,
                drift_ppm: if id.is_multiple_of(2) { 20.0 } else { -15.0 },
            },
            is_gateway: gateway,
            is_anchor: anchor,
            has_altimeter: true,
            altimeter_sigma_m: if anchor { 0.0 } else { 0.02 },
        };
        ScenarioFile {
            schema_version: SCHEMA_VERSION,
            description: Some(
                "Six-node swarm: three fixed anchors (node 1 is the mesh gateway) and three MAVs \
                 at 1.5 m altitude. A wall between x=9 and x=10 biases some UWB ranges; an \
                 interference window degrades Wi-Fi around the gateway from 12 s to 18 s. \
                 'status' is small and rides UWB ranging frames; 'map' is bulk data over the mesh."
                    .into(),
            ),
            duration_s: 30.0,
            seed: 1,
            world: WorldSpec {
                obstacles: vec![BoxSpec {
                    min: [9.0, 4.0, 0.0],
                    max: [10.0, 8.0, 3.0],
                }],
                interference_windows: vec![InterferenceSpec {
                    start_s: 12.0,
                    end_s: 18.0,
                    region: BoxSpec {
                        min: [-2.0, -2.0, -1.0],
                        max: [2.0, 2.0, 3.0],
                    },
                    attenuation: 0.6,
                }],
            },
            channel: ChannelSpec::default(),
            protocol: ProtocolSpec::default(),
            nodes: vec![
                node(1, &[(0.0, [0.0, 0.0, 0.0])], true, true),
                node(2, &[(0.0, [20.0, 0.0, 0.0])], true, false),
                node(3, &[(0.0, [0.0, 20.0, 0.0])], true, false),
                node(
                    4,
                    &[
                        (0.0, [4.0, 5.0, 1.5]),
                        (15.0, [12.0, 6.0, 1.5]),
                        (30.0, [4.0, 5.0, 1.5]),
                    ],
                    false,
                    false,
                ),
                node(5, &[(0.0, [14.0, 12.0, 1.5])], false, false),
                node(6, &[(0.0, [6.0, 14.0, 1.5]), (30.0, [16.0, 16.0, 1.5])], false, false),
            ],
            topics: vec![
                TopicSpec {
                    name: "status".into(),
                    rate_limit: 5.0,
                    burst: 2,
                    transport: Transport::Auto,
                    max_payload: 64,
                    publishers: vec![4, 5],
                    subscribers: vec![1, 6],
                    publish_hz: 4.0,
                    payload_len: 16,
                    start_s: 2.0,
                },
                TopicSpec {
                    name: "map".into(),
                    rate_limit: 2.0,
                    burst: 1,
                    transport: Transport::Mesh,
                    max_payload: 1024,
                    publishers: vec![6],
                    subscribers: vec![1],
                    publish_hz: 5.0,
                    payload_len: 512,
                    start_s: 2.0,
                },
            ],
        }
    }
}

impl NodeSpec {
    fn trajectory(&self) -> Result<Trajectory, crate::model::TrajectoryError> {
        Trajectory::new(
            self.waypoints
                .iter()
                .map(|w| Waypoint {
                    t: w.t_s,
                    position: Position::from(w.pos),
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicPlan {
    pub topic: Topic,
    pub publishers: Vec<NodeId>,
    pub subscribers: Vec<NodeId>,
    pub publish_hz: f64,
    pub payload_len: usize,
    pub start_s: f64,
}

/// Validated runtime model of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub duration_s: f64,
    pub seed: u64,
    pub world: World,
    pub link: LinkModel,
    pub hop_latency_s: f64,
    pub uwb: UwbChannel,
    pub mesh: MeshConfig,
    pub timing: UwbTiming,
    pub ranging_rate_hz: f64,
    pub localization_interval_s: f64,
    pub solver: SolverConfig,
    pub smoothing_window: usize,
    pub metrics_rate_hz: f64,
    pub uwb_queue_depth: usize,
    /// Sorted by id.
    pub nodes: Vec<NodeConfig>,
    pub topics: Vec<TopicPlan>,
}

impl Scenario {
    pub fn node(&self, id: NodeId) -> Option<&NodeConfig> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn node_ids(&self) -> Vec<NodeId> {
        self.nodes.iter().map(|n| n.id).collect()
    }

    pub fn topic_by_name(&self, name: &str) -> Option<&TopicPlan> {
        self.topics.iter().find(|t| t.topic.name == name)
    }

    pub fn topic_names(&self) -> BTreeMap<u16, String> {
        self.topics.iter().map(|t| (t.topic.id, t.topic.name.clone())).collect()
    }
}
