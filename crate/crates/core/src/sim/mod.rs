//! Deterministic discrete-event simulation of a swarm.

pub mod graph;
pub mod kernel;
pub mod metrics;
pub mod queue;
pub mod rng;

pub use kernel::{run, EventKind, Simulation};
pub use metrics::{rmse, Metric, MetricsReport, SeriesPoint, Summary, TopicSummary};
pub use queue::{EventQueue, SimTime};
pub use rng::{Purpose, RandomStreams};
