//! Ground-truth world model: node identities, motion, clocks and the
//! obstacle/interference geometry the radio channels are evaluated against.
//!
//! All nodes share one orientation reference, so a pose is just a
//! translation in the world frame.

use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

/// Node identifier. Two bytes on every wire format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u16);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A point in the shared world frame, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position {
    pub const ORIGIN: Position = Position { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (*self - *other).norm()
    }

    pub fn horizontal_distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn scale(&self, k: f64) -> Position {
        Position::new(self.x * k, self.y * k, self.z * k)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for Position {
    fn from(v: [f64; 3]) -> Self {
        Position::new(v[0], v[1], v[2])
    }
}

impl Add for Position {
    type Output = Position;
    fn add(self, rhs: Position) -> Position {
        Position::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Position {
    type Output = Position;
    fn sub(self, rhs: Position) -> Position {
        Position::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub t: f64,
    pub position: Position,
}

/// Piecewise-linear path. Queries outside the waypoint span clamp to the
/// nearest endpoint, so a node with one waypoint hovers in place.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    waypoints: Vec<Waypoint>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrajectoryError {
    #[error("trajectory needs at least one waypoint")]
    Empty,
    #[error("waypoint times must be strictly increasing (index {0})")]
    NotIncreasing(usize),
    #[error("waypoint {0} is not finite")]
    NonFinite(usize),
}

impl Trajectory {
    pub fn new(waypoints: Vec<Waypoint>) -> Result<Self, TrajectoryError> {
        if waypoints.is_empty() {
            return Err(TrajectoryError::Empty);
        }
        for (i, w) in waypoints.iter().enumerate() {
            if !w.t.is_finite() || !w.position.is_finite() {
                return Err(TrajectoryError::NonFinite(i));
            }
            if i > 0 && w.t <= waypoints[i - 1].t {
                return Err(TrajectoryError::NotIncreasing(i));
            }
        }
        Ok(Self { waypoints })
    }

    pub fn stationary(p: Position) -> Self {
        Self {
            waypoints: vec![Waypoint { t: 0.0, position: p }],
        }
    }

    pub fn waypoints(&self) -> &[Waypoint] {
        &self.waypoints
    }

    pub fn position_at(&self, t: f64) -> Position {
        position_at(self, t)
    }
}

pub fn position_at(trajectory: &Trajectory, t: f64) -> Position {
    let w = &trajectory.waypoints;
    let first = &w[0];
    let last = &w[w.len() - 1];
    if t <= first.t {
        return first.position;
    }
    if t >= last.t {
        return last.position;
    }
    // first index whose time is > t; always in 1..len here
    let hi = w.partition_point(|p| p.t <= t);
    let (a, b) = (&w[hi - 1], &w[hi]);
    let u = (t - a.t) / (b.t - a.t);
    a.position + (b.position - a.position).scale(u)
}

/// Local oscillator of a node: constant offset plus a frequency error.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClockModel {
    /// Nanoseconds.
    pub offset_ns: f64,
    /// Parts per million.
    pub drift_ppm: f64,
}

pub const MAX_DRIFT_PPM: f64 = 100.0;

impl ClockModel {
    pub fn local_time(&self, t_true_ns: f64) -> f64 {
        local_time(self, t_true_ns)
    }
}

pub fn local_time(clock: &ClockModel, t_true_ns: f64) -> f64 {
    t_true_ns + t_true_ns * clock.drift_ppm / 1e6 + clock.offset_ns
}

/// Axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Position,
    pub max: Position,
}

impl Aabb {
    pub fn new(min: Position, max: Position) -> Self {
        Self { min, max }
    }

    pub fn is_valid(&self) -> bool {
        self.min.is_finite()
            && self.max.is_finite()
            && self.max.x >= self.min.x
            && self.max.y >= self.min.y
            && self.max.z >= self.min.z
    }

    pub fn contains(&self, p: &Position) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }

    /// Slab test for the closed segment `a -> b`. Touching a face counts.
    pub fn intersects_segment(&self, a: &Position, b: &Position) -> bool {
        let (mut t0, mut t1) = (0.0_f64, 1.0_f64);
        let start = a.as_array();
        let end = b.as_array();
        let lo = self.min.as_array();
        let hi = self.max.as_array();
        for k in 0..3 {
            let d = end[k] - start[k];
            if d == 0.0 {
                if start[k] < lo[k] || start[k] > hi[k] {
                    return false;
                }
                continue;
            }
            let mut ta = (lo[k] - start[k]) / d;
            let mut tb = (hi[k] - start[k]) / d;
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if t0 > t1 {
                return false;
            }
        }
        true
    }
}

/// Time-bounded region where the Wi-Fi channel is degraded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferenceWindow {
    pub start_s: f64,
    pub end_s: f64,
    pub region: Aabb,
    /// Fraction of delivery probability removed, in [0, 1].
    pub attenuation: f64,
}

impl InterferenceWindow {
    pub fn is_active(&self, t: f64) -> bool {
        t >= self.start_s && t < self.end_s
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct World {
    pub obstacles: Vec<Aabb>,
    pub interference_windows: Vec<InterferenceWindow>,
}

impl World {
    pub fn is_nlos(&self, a: &Position, b: &Position) -> bool {
        is_nlos(self, a, b)
    }

    /// Strongest attenuation among the windows active at `t` whose region
    /// covers either endpoint; 0 when none applies.
    pub fn attenuation_at(&self, t: f64, a: &Position, b: &Position) -> f64 {
        self.interference_windows
            .iter()
            .filter(|w| w.is_active(t) && (w.region.contains(a) || w.region.contains(b)))
            .map(|w| w.attenuation)
            .fold(0.0, f64::max)
    }
}

pub fn is_nlos(world: &World, a: &Position, b: &Position) -> bool {
    world.obstacles.iter().any(|o| o.intersects_segment(a, b))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeConfig {
    pub id: NodeId,
    pub trajectory: Trajectory,
    pub clock: ClockModel,
    pub is_gateway: bool,
    pub is_anchor: bool,
    pub has_altimeter: bool,
    pub altimeter_sigma: f64,
}

impl NodeConfig {
    pub fn stationary(id: u16, p: Position) -> Self {
        Self {
            id: NodeId(id),
            trajectory: Trajectory::stationary(p),
            clock: ClockModel::default(),
            is_gateway: false,
            is_anchor: false,
            has_altimeter: true,
            altimeter_sigma: 0.0,
        }
    }

    pub fn position_at(&self, t: f64) -> Position {
        self.trajectory.position_at(t)
    }
}
