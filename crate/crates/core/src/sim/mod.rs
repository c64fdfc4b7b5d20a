//! Discrete-event engine and end-to-end scenario runs.

pub mod metrics;
pub mod runner;
pub mod scenario;
pub mod scheduler;

pub use metrics::{compute_metrics, Metrics};
pub use runner::{
    discovery_config, prepare_network, run_scenario, PacketReport, PreparedNetwork, Report,
    RunOutcome,
};
pub use scenario::{Scenario, ScenarioError};
pub use scheduler::{EventKind, Scheduler, SimEvent, Tick};
