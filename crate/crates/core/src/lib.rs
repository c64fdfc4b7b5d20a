//! Deterministic simulator for fault-tolerant, blackhole-resistant routing
//! in mobile ad-hoc networks.
//!
//! A run thresholds a range matrix into a coverage graph, pings every node
//! and repairs the graph around failed ones, floods a route request from
//! source to destination, then delivers data while detecting and routing
//! around nodes that drop or stall packets.

pub mod fault_tolerance;
pub mod render;
pub mod routing;
pub mod sim;
pub mod topology;
pub mod trace;

pub use fault_tolerance::{
    build_connection_table, ping_sweep, repair_failure, ConnectionEntry, ConnectionTable,
    NodeState, NodeStatus,
};
pub use routing::{
    classify, deliver_data, discover_route, discover_route_with, fallback_route, Adversaries,
    CollisionMode, DataPacket, DeliveryOutcome, DetectionEvent, DetectionKind, Discovery,
    DiscoveryConfig, Route, RoutingError,
};
pub use sim::{
    compute_metrics, run_scenario, Metrics, Report, RunOutcome, Scenario, ScenarioError,
};
pub use topology::{
    apply_threshold, build_adjacency, CoverageGraph, NodeId, TopologyError, Weight,
    WeightedAdjacency,
};
