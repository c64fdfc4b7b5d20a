//! Source-routed discovery and delivery with blackhole detection.
//!
//! Discovery floods a route request from the source. Forwarding over a link
//! costs its weight in ticks, and every node rebroadcasts at most once: the
//! copies that reach it in its first-arrival tick travel together in that
//! single broadcast, later copies are suppressed. The destination never
//! rebroadcasts but records every copy that reaches it.
//!
//! Delivery walks a recorded route hop by hop. Each hop is acknowledged by
//! its receiver; a missing acknowledgment after `2 * w + 1` ticks pins the
//! drop on that receiver. Per-hop receive timestamps expose nodes that hold
//! packets for more than twice the link's expected latency.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::scheduler::{EventKind, Scheduler, Tick};
use crate::topology::{CoverageGraph, NodeId, TopologyError};

/// Upper bound on route copies carried by one broadcast. Copies are kept in
/// route order, so the smallest ones always survive.
pub const MAX_COPIES_PER_BROADCAST: usize = 16;

/// Extra ticks an acknowledgment may take beyond one round trip.
pub const ACK_GRACE: Tick = 1;

/// Observed hop latency above this multiple of the link weight flags the
/// forwarding node.
pub const DELAY_SUSPICION_FACTOR: u64 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RoutingError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("source and destination are both `{0}`")]
    SameEndpoint(NodeId),
    #[error("no route from `{from}` to `{to}`")]
    NoRoute { from: NodeId, to: NodeId },
    #[error("invalid route: {0}")]
    InvalidRoute(String),
    #[error("every recorded route crosses an excluded node")]
    NoSafeRoute,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RouteRequest {
    pub request_id: u64,
    pub source: NodeId,
    pub dest: NodeId,
    pub identifiers: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RouteReply {
    pub request_id: u64,
    pub route: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Route {
    pub hops: Vec<NodeId>,
    pub total_delay: u64,
}

impl Route {
    /// Validates `hops` against `g`: at least two nodes, no repeats, every
    /// consecutive pair linked.
    pub fn new(g: &CoverageGraph, hops: Vec<NodeId>) -> Result<Route, RoutingError> {
        if hops.len() < 2 {
            return Err(RoutingError::InvalidRoute("fewer than two hops".into()));
        }
        let unique: BTreeSet<&NodeId> = hops.iter().collect();
        if unique.len() != hops.len() {
            return Err(RoutingError::InvalidRoute("repeated node".into()));
        }
        let mut total_delay = 0;
        for pair in hops.windows(2) {
            g.require(&pair[0])?;
            g.require(&pair[1])?;
            let w = g.weight(&pair[0], &pair[1]);
            if w == 0 {
                return Err(RoutingError::InvalidRoute(format!(
                    "{}-{} is not a link",
                    pair[0], pair[1]
                )));
            }
            total_delay += u64::from(w);
        }
        Ok(Route { hops, total_delay })
    }

    pub fn source(&self) -> &NodeId {
        &self.hops[0]
    }

    pub fn dest(&self) -> &NodeId {
        &self.hops[self.hops.len() - 1]
    }

    pub fn intermediates(&self) -> &[NodeId] {
        &self.hops[1..self.hops.len() - 1]
    }

    pub fn contains(&self, node: &NodeId) -> bool {
        self.hops.contains(node)
    }
}

/// Collision handling during flooding. When on, copies from two or more
/// senders reaching one node in the same tick are all lost with probability
/// `p`, drawn from the seeded generator.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollisionMode {
    #[default]
    Off,
    On(f64),
}

/// One step of the flooding trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum FloodEvent {
    Broadcast {
        tick: Tick,
        node: NodeId,
        copies: Vec<Vec<NodeId>>,
    },
    /// Copy taken into the receiver's pending broadcast.
    Accepted {
        tick: Tick,
        node: NodeId,
        from: NodeId,
        identifiers: Vec<NodeId>,
    },
    Suppressed {
        tick: Tick,
        node: NodeId,
        from: NodeId,
        identifiers: Vec<NodeId>,
    },
    /// Copy reaching the destination.
    Recorded {
        tick: Tick,
        node: NodeId,
        from: NodeId,
        identifiers: Vec<NodeId>,
    },
    Collided {
        tick: Tick,
        node: NodeId,
        from: NodeId,
        identifiers: Vec<NodeId>,
    },
}

impl FloodEvent {
    pub fn tick(&self) -> Tick {
        match self {
            FloodEvent::Broadcast { tick, .. }
            | FloodEvent::Accepted { tick, .. }
            | FloodEvent::Suppressed { tick, .. }
            | FloodEvent::Recorded { tick, .. }
            | FloodEvent::Collided { tick, .. } => *tick,
        }
    }

    pub fn node(&self) -> &NodeId {
        match self {
            FloodEvent::Broadcast { node, .. }
            | FloodEvent::Accepted { node, .. }
            | FloodEvent::Suppressed { node, .. }
            | FloodEvent::Recorded { node, .. }
            | FloodEvent::Collided { node, .. } => node,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReplyHop {
    pub tick: Tick,
    pub from: NodeId,
    pub to: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FloodTrace {
    pub request_id: u64,
    pub source: NodeId,
    pub dest: NodeId,
    pub events: Vec<FloodEvent>,
    pub reply: Vec<ReplyHop>,
}

impl FloodTrace {
    pub fn broadcasts_per_node(&self) -> BTreeMap<NodeId, usize> {
        let mut counts = BTreeMap::new();
        for ev in &self.events {
            if let FloodEvent::Broadcast { node, .. } = ev {
                *counts.entry(node.clone()).or_insert(0) += 1;
            }
        }
        counts
    }

    pub fn last_tick(&self) -> Tick {
        self.events.iter().map(FloodEvent::tick).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Discovery {
    /// The request the source originated.
    pub request: RouteRequest,
    pub primary: Route,
    /// Every route copy that reached the destination, in arrival order.
    pub recorded: Vec<Route>,
    pub reply: RouteReply,
    pub trace: FloodTrace,
}

#[derive(Debug, Clone)]
pub struct DiscoveryConfig {
    pub request_id: u64,
    pub collision: CollisionMode,
    pub seed: u64,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        DiscoveryConfig {
            request_id: 1,
            collision: CollisionMode::Off,
            seed: 0,
        }
    }
}

pub fn discover_route(
    g: &CoverageGraph,
    source: &NodeId,
    dest: &NodeId,
) -> Result<Discovery, RoutingError> {
    discover_route_with(g, source, dest, &DiscoveryConfig::default())
}

#[derive(Debug, Clone)]
enum FloodMsg {
    Transmit(usize),
    Arrive {
        from: usize,
        to: usize,
        identifiers: Vec<usize>,
    },
}

pub fn discover_route_with(
    g: &CoverageGraph,
    source: &NodeId,
    dest: &NodeId,
    config: &DiscoveryConfig,
) -> Result<Discovery, RoutingError> {
    let s = g.require(source)?;
    let d = g.require(dest)?;
    if s == d {
        return Err(RoutingError::SameEndpoint(source.clone()));
    }
    let labels = g.labels();
    let rows = g.adjacency().rows();
    let n = labels.len();
    let named = |ids: &[usize]| -> Vec<NodeId> { ids.iter().map(|&i| labels[i].clone()).collect() };
    // Compares two copies as they would read once `at` is appended.
    let route_order = |a: &[usize], b: &[usize], at: usize| {
        let tail = std::iter::once(&labels[at]);
        a.iter()
            .map(|&i| &labels[i])
            .chain(tail.clone())
            .cmp(b.iter().map(|&i| &labels[i]).chain(tail))
    };
    let mut rng = match config.collision {
        CollisionMode::On(_) => Some(<ChaCha8Rng as rand::SeedableRng>::seed_from_u64(
            config.seed,
        )),
        CollisionMode::Off => None,
    };

    let mut events = Vec::new();
    let mut accepted_at: Vec<Option<Tick>> = vec![None; n];
    let mut pending: Vec<Vec<Vec<usize>>> = vec![Vec::new(); n];
    let mut arrivals: Vec<(Tick, Vec<usize>)> = Vec::new();

    let mut sched = Scheduler::new();
    accepted_at[s] = Some(0);
    pending[s].push(vec![s]);
    sched.schedule_in(0, EventKind::Broadcast, FloodMsg::Transmit(s));

    loop {
        let batch = sched.pop_tick();
        if batch.is_empty() {
            break;
        }
        let tick = sched.now();
        let mut by_receiver: BTreeMap<usize, Vec<(usize, Vec<usize>)>> = BTreeMap::new();
        for ev in batch {
            match ev.payload {
                FloodMsg::Transmit(u) => {
                    let copies = std::mem::take(&mut pending[u]);
                    events.push(FloodEvent::Broadcast {
                        tick,
                        node: labels[u].clone(),
                        copies: copies.iter().map(|c| named(c)).collect(),
                    });
                    for (v, &w) in rows[u].iter().enumerate() {
                        if w == 0 {
                            continue;
                        }
                        for copy in &copies {
                            sched.schedule_in(
                                u64::from(w),
                                EventKind::Receive,
                                FloodMsg::Arrive {
                                    from: u,
                                    to: v,
                                    identifiers: copy.clone(),
                                },
                            );
                        }
                    }
                }
                FloodMsg::Arrive {
                    from,
                    to,
                    identifiers,
                } => by_receiver.entry(to).or_default().push((from, identifiers)),
            }
        }

        for (v, mut group) in by_receiver {
            group.sort_by(|a, b| route_order(&a.1, &b.1, v).then(a.0.cmp(&b.0)));
            let senders: BTreeSet<usize> = group.iter().map(|(f, _)| *f).collect();
            if let (Some(rng), CollisionMode::On(p)) = (rng.as_mut(), config.collision) {
                if senders.len() > 1 && rng.gen_bool(p.clamp(0.0, 1.0)) {
                    for (from, ids) in group {
                        events.push(FloodEvent::Collided {
                            tick,
                            node: labels[v].clone(),
                            from: labels[from].clone(),
                            identifiers: named(&ids),
                        });
                    }
                    continue;
                }
            }
            let mut newly_accepted = false;
            for (from, ids) in group {
                let node = labels[v].clone();
                let from_label = labels[from].clone();
                if v == d {
                    let mut full = ids.clone();
                    full.push(v);
                    events.push(FloodEvent::Recorded {
                        tick,
                        node,
                        from: from_label,
                        identifiers: named(&full),
                    });
                    arrivals.push((tick, full));
                    continue;
                }
                let fresh = accepted_at[v].is_none_or(|t| t == tick) && v != s;
                if !fresh || ids.contains(&v) || pending[v].len() >= MAX_COPIES_PER_BROADCAST {
                    events.push(FloodEvent::Suppressed {
                        tick,
                        node,
                        from: from_label,
                        identifiers: named(&ids),
                    });
                    continue;
                }
                let mut copy = ids;
                copy.push(v);
                events.push(FloodEvent::Accepted {
                    tick,
                    node,
                    from: from_label,
                    identifiers: named(&copy),
                });
                if accepted_at[v].is_none() {
                    newly_accepted = true;
                }
                accepted_at[v] = Some(tick);
                pending[v].push(copy);
            }
            if newly_accepted {
                sched.schedule_in(0, EventKind::Broadcast, FloodMsg::Transmit(v));
            }
        }
    }

    let recorded: Vec<Route> = arrivals
        .iter()
        .map(|(_, ids)| Route {
            hops: named(ids),
            total_delay: path_delay(rows, ids),
        })
        .collect();
    let Some(primary) = recorded.first().cloned() else {
        return Err(RoutingError::NoRoute {
            from: source.clone(),
            to: dest.clone(),
        });
    };

    let mut reply = Vec::new();
    let mut tick = arrivals[0].0;
    for pair in arrivals[0].1.windows(2).rev() {
        tick += u64::from(rows[pair[1]][pair[0]]);
        reply.push(ReplyHop {
            tick,
            from: labels[pair[1]].clone(),
            to: labels[pair[0]].clone(),
        });
    }

    Ok(Discovery {
        request: RouteRequest {
            request_id: config.request_id,
            source: source.clone(),
            dest: dest.clone(),
            identifiers: vec![source.clone()],
        },
        reply: RouteReply {
            request_id: config.request_id,
            route: primary.hops.clone(),
        },
        primary,
        recorded,
        trace: FloodTrace {
            request_id: config.request_id,
            source: source.clone(),
            dest: dest.clone(),
            events,
            reply,
        },
    })
}

fn path_delay(rows: &[Vec<u32>], ids: &[usize]) -> u64 {
    ids.windows(2).map(|p| u64::from(rows[p[0]][p[1]])).sum()
}

/// Nodes that misbehave on the data path.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Adversaries {
    /// Blackholes: discard data without acknowledging it.
    pub malicious: BTreeSet<NodeId>,
    /// Nodes that forward after `multiplier * w` ticks instead of `w`.
    pub delayers: BTreeMap<NodeId, u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DataPacket {
    pub sequence: u64,
    pub route: Route,
    pub payload_size: u64,
    pub send_timestamp: Tick,
    /// Arrival tick at each hop after the source.
    pub receive_timestamps: Vec<Tick>,
}

impl DataPacket {
    pub fn new(sequence: u64, route: Route, payload_size: u64, send_timestamp: Tick) -> Self {
        DataPacket {
            sequence,
            route,
            payload_size,
            send_timestamp,
            receive_timestamps: Vec::new(),
        }
    }
}

/// Where a hop went wrong. `hop_index` counts links from the source, so hop
/// 0 is source to first relay.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HopEvidence {
    pub hop_index: usize,
    pub sent_tick: Tick,
    pub observed_tick: Tick,
    pub expected_latency: u64,
    pub observed_latency: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum DeliveryOutcome {
    Delivered {
        packet: DataPacket,
        delivered_at: Tick,
        end_to_end_delay: u64,
        delayed_at: Option<(NodeId, HopEvidence)>,
    },
    DroppedAt {
        packet: DataPacket,
        node: NodeId,
        evidence: HopEvidence,
    },
}

impl DeliveryOutcome {
    pub fn packet(&self) -> &DataPacket {
        match self {
            DeliveryOutcome::Delivered { packet, .. }
            | DeliveryOutcome::DroppedAt { packet, .. } => packet,
        }
    }

    pub fn is_delivered(&self) -> bool {
        matches!(self, DeliveryOutcome::Delivered { .. })
    }

    /// Tick at which the sender learns the result.
    pub fn resolved_at(&self) -> Tick {
        match self {
            DeliveryOutcome::Delivered { delivered_at, .. } => *delivered_at,
            DeliveryOutcome::DroppedAt { evidence, .. } => evidence.observed_tick,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum DataMsg {
    Arrive(usize),
    Ack(usize),
    Deadline(usize),
}

/// Sends `packet` along its route starting at `packet.send_timestamp`.
/// Endpoints always behave; only intermediates act on `adversaries`.
pub fn deliver_data(
    g: &CoverageGraph,
    adversaries: &Adversaries,
    mut packet: DataPacket,
) -> Result<DeliveryOutcome, RoutingError> {
    let checked = Route::new(g, packet.route.hops.clone())?;
    if checked.total_delay != packet.route.total_delay {
        return Err(RoutingError::InvalidRoute(
            "total delay does not match links".into(),
        ));
    }
    let hops = &checked.hops;
    let last = hops.len() - 1;
    let weights: Vec<u64> = hops
        .windows(2)
        .map(|p| u64::from(g.weight(&p[0], &p[1])))
        .collect();

    let mut sched = Scheduler::starting_at(packet.send_timestamp);
    let mut sent_at = vec![0; weights.len()];
    let mut acked = vec![false; weights.len()];
    let transmit =
        |sched: &mut Scheduler<DataMsg>, sent_at: &mut Vec<Tick>, hop: usize, hold: u64| {
            sent_at[hop] = sched.now() + hold;
            sched.schedule_in(
                hold + weights[hop],
                EventKind::Receive,
                DataMsg::Arrive(hop),
            );
            sched.schedule_in(
                hold + 2 * weights[hop] + ACK_GRACE,
                EventKind::Timeout,
                DataMsg::Deadline(hop),
            );
        };
    transmit(&mut sched, &mut sent_at, 0, 0);

    while let Some(ev) = sched.pop() {
        match ev.payload {
            DataMsg::Arrive(hop) => {
                let receiver = hop + 1;
                packet.receive_timestamps.push(ev.tick);
                let node = &hops[receiver];
                if receiver != last && adversaries.malicious.contains(node) {
                    // silently discarded, no ack
                    continue;
                }
                sched.schedule_in(weights[hop], EventKind::Ack, DataMsg::Ack(hop));
                if receiver == last {
                    let delayed_at = find_delay(&packet, &weights);
                    return Ok(DeliveryOutcome::Delivered {
                        end_to_end_delay: ev.tick - packet.send_timestamp,
                        delivered_at: ev.tick,
                        delayed_at,
                        packet,
                    });
                }
                let hold = match adversaries.delayers.get(node) {
                    Some(&m) if m > 1 => u64::from(m - 1) * weights[receiver],
                    _ => 0,
                };
                transmit(&mut sched, &mut sent_at, receiver, hold);
            }
            DataMsg::Ack(hop) => acked[hop] = true,
            DataMsg::Deadline(hop) => {
                if !acked[hop] {
                    return Ok(DeliveryOutcome::DroppedAt {
                        node: hops[hop + 1].clone(),
                        evidence: HopEvidence {
                            hop_index: hop,
                            sent_tick: sent_at[hop],
                            observed_tick: ev.tick,
                            expected_latency: weights[hop],
                            observed_latency: None,
                        },
                        packet,
                    });
                }
            }
        }
    }
    unreachable!("every transmission schedules a deadline")
}

fn find_delay(packet: &DataPacket, weights: &[u64]) -> Option<(NodeId, HopEvidence)> {
    let mut times = Vec::with_capacity(packet.receive_timestamps.len() + 1);
    times.push(packet.send_timestamp);
    times.extend_from_slice(&packet.receive_timestamps);
    // hop 0 leaves the source, which never delays
    (1..weights.len()).find_map(|hop| {
        let observed = times[hop + 1] - times[hop];
        (observed > DELAY_SUSPICION_FACTOR * weights[hop]).then(|| {
            (
                packet.route.hops[hop].clone(),
                HopEvidence {
                    hop_index: hop,
                    sent_tick: times[hop],
                    observed_tick: times[hop + 1],
                    expected_latency: weights[hop],
                    observed_latency: Some(observed),
                },
            )
        })
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionKind {
    Dropper,
    Delayer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DetectionEvent {
    pub node: NodeId,
    pub kind: DetectionKind,
    pub evidence: HopEvidence,
}

pub fn classify(outcome: &DeliveryOutcome) -> Option<DetectionEvent> {
    match outcome {
        DeliveryOutcome::DroppedAt { node, evidence, .. } => Some(DetectionEvent {
            node: node.clone(),
            kind: DetectionKind::Dropper,
            evidence: evidence.clone(),
        }),
        DeliveryOutcome::Delivered {
            delayed_at: Some((node, evidence)),
            ..
        } => Some(DetectionEvent {
            node: node.clone(),
            kind: DetectionKind::Delayer,
            evidence: evidence.clone(),
        }),
        DeliveryOutcome::Delivered { .. } => None,
    }
}

/// Earliest recorded route that avoids every excluded node.
pub fn fallback_route(
    recorded: &[Route],
    excluded: &BTreeSet<NodeId>,
) -> Result<Route, RoutingError> {
    recorded
        .iter()
        .find(|r| !r.hops.iter().any(|n| excluded.contains(n)))
        .cloned()
        .ok_or(RoutingError::NoSafeRoute)
}
