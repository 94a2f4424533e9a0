//! Simulation of a MAV swarm that meshes over Wi-Fi, ranges peer-to-peer
//! over UWB, and propagates relative localization outward from anchors.

pub mod bus;
pub mod loc;
pub mod mesh;
pub mod model;
pub mod scenario;
pub mod sim;
pub mod uwb;

pub use model::{NodeId, Position};
pub use scenario::{validate, Scenario, ScenarioFile};
pub use sim::{MetricsReport, Simulation};
