//! Liveness sweep, node connection table and topology repair.
//!
//! Liveness is simulated: a node is inactive exactly when the scenario lists
//! it as failed. The sweep still walks every ping through the scheduler so
//! that the request, response and timeout ticks end up in the report.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::sim::scheduler::{EventKind, Scheduler, Tick};
use crate::topology::{CoverageGraph, NodeId, TopologyError, Weight};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeState {
    Active,
    Inactive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NodeStatus {
    pub node: NodeId,
    pub state: NodeState,
}

/// One simulated ping exchange between the source and `node`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PingRecord {
    pub node: NodeId,
    pub request_tick: Tick,
    pub response_tick: Option<Tick>,
    pub deadline: Tick,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct PingSweep {
    pub statuses: Vec<NodeStatus>,
    pub pings: Vec<PingRecord>,
    /// Healthy nodes outside the source's component.
    pub unreachable: Vec<NodeId>,
}

impl PingSweep {
    pub fn active(&self) -> BTreeSet<NodeId> {
        self.with_state(NodeState::Active)
    }

    pub fn inactive(&self) -> BTreeSet<NodeId> {
        self.with_state(NodeState::Inactive)
    }

    fn with_state(&self, state: NodeState) -> BTreeSet<NodeId> {
        self.statuses
            .iter()
            .filter(|s| s.state == state)
            .map(|s| s.node.clone())
            .collect()
    }
}

/// Pings every node in `source`'s component. The ping travels the shortest
/// path, so a live node answers after one round trip; the deadline is that
/// round trip plus one tick of grace.
///
/// Failed nodes outside the component are reported inactive without a ping.
/// An empty graph yields an empty sweep.
pub fn ping_sweep(
    g: &CoverageGraph,
    source: &NodeId,
    failed: &BTreeSet<NodeId>,
) -> Result<PingSweep, TopologyError> {
    if let Some(unknown) = failed.iter().find(|n| !g.contains(n)) {
        return Err(TopologyError::UnknownNode(unknown.clone()));
    }
    if g.is_empty() {
        return Ok(PingSweep::default());
    }
    let dist = g.shortest_delays(source)?;
    let labels = g.labels();

    #[derive(Clone, Copy)]
    enum Ping {
        Request(usize),
        Response(usize),
        Deadline(usize),
    }

    let mut sched = Scheduler::new();
    let mut records: BTreeMap<usize, PingRecord> = BTreeMap::new();
    for (i, d) in dist.iter().enumerate() {
        let Some(d) = *d else { continue };
        sched.schedule_in(d, EventKind::PingReq, Ping::Request(i));
        sched.schedule_in(2 * d + 1, EventKind::Timeout, Ping::Deadline(i));
        records.insert(
            i,
            PingRecord {
                node: labels[i].clone(),
                request_tick: 0,
                response_tick: None,
                deadline: 2 * d + 1,
            },
        );
    }

    let mut state: BTreeMap<usize, NodeState> = BTreeMap::new();
    while let Some(ev) = sched.pop() {
        match ev.payload {
            Ping::Request(i) => {
                if !failed.contains(&labels[i]) {
                    let back = dist[i].unwrap_or(0);
                    sched.schedule_in(back, EventKind::PingResp, Ping::Response(i));
                }
            }
            Ping::Response(i) => {
                if let Some(r) = records.get_mut(&i) {
                    r.response_tick = Some(ev.tick);
                }
                state.insert(i, NodeState::Active);
            }
            Ping::Deadline(i) => {
                state.entry(i).or_insert(NodeState::Inactive);
            }
        }
    }

    let mut sweep = PingSweep::default();
    for (i, label) in labels.iter().enumerate() {
        let st = match state.get(&i) {
            Some(st) => *st,
            None if failed.contains(label) => NodeState::Inactive,
            None => {
                sweep.unreachable.push(label.clone());
                continue;
            }
        };
        sweep.statuses.push(NodeStatus {
            node: label.clone(),
            state: st,
        });
    }
    sweep.pings = records.into_values().collect();
    Ok(sweep)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConnectionEntry {
    pub node: NodeId,
    pub links: usize,
    pub priority: usize,
}

/// Nodes ranked by communication links. Entries are kept in priority order,
/// priority 1 first.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
#[serde(transparent)]
pub struct ConnectionTable {
    entries: Vec<ConnectionEntry>,
}

impl ConnectionTable {
    pub fn entries(&self) -> &[ConnectionEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, node: &NodeId) -> Option<&ConnectionEntry> {
        self.entries.iter().find(|e| &e.node == node)
    }

    pub fn priority_of(&self, node: &NodeId) -> Option<usize> {
        self.get(node).map(|e| e.priority)
    }

    /// Entries reordered to follow `order` (typically the scenario's node
    /// order); nodes not in the table are skipped.
    pub fn in_order<'a>(
        &'a self,
        order: &'a [NodeId],
    ) -> impl Iterator<Item = &'a ConnectionEntry> + 'a {
        order.iter().filter_map(|n| self.get(n))
    }
}

/// Ranks `active` nodes by descending link count; equal counts fall back to
/// ascending label.
pub fn build_connection_table(
    g: &CoverageGraph,
    active: &BTreeSet<NodeId>,
) -> Result<ConnectionTable, TopologyError> {
    let mut ranked = active
        .iter()
        .map(|n| Ok((n.clone(), g.degree(n)?)))
        .collect::<Result<Vec<_>, TopologyError>>()?;
    ranked.sort_by(|(a, la), (b, lb)| lb.cmp(la).then_with(|| a.cmp(b)));
    let entries = ranked
        .into_iter()
        .enumerate()
        .map(|(i, (node, links))| ConnectionEntry {
            node,
            links,
            priority: i + 1,
        })
        .collect();
    Ok(ConnectionTable { entries })
}

/// A link added while repairing around a failed node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RepairedEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub weight: Weight,
    pub failed: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Repair {
    pub graph: CoverageGraph,
    pub added: Vec<RepairedEdge>,
}

/// Cuts `failed` out of the graph and chains its former live neighbors in
/// priority order, highest priority first.
///
/// Neighbors not present in `table` are not live and are left alone. A new
/// link spans both removed links, capped at `threshold - 1`; pairs that are
/// already linked keep their existing weight.
pub fn repair_failure(
    g: &CoverageGraph,
    table: &ConnectionTable,
    failed: &NodeId,
) -> Result<Repair, TopologyError> {
    let mut neighbors: Vec<(usize, NodeId, Weight)> = g
        .neighbors(failed)?
        .into_iter()
        .filter_map(|(n, w)| table.priority_of(&n).map(|p| (p, n, w)))
        .collect();
    neighbors.sort();

    let mut graph = g.without_links_of(failed)?;
    let cap = g.threshold().saturating_sub(1);
    let mut added = Vec::new();
    for pair in neighbors.windows(2) {
        let (_, u, wu) = &pair[0];
        let (_, v, wv) = &pair[1];
        if graph.weight(u, v) > 0 {
            continue;
        }
        let weight = (wu + wv).min(cap);
        if weight == 0 {
            continue;
        }
        graph.set_weight(u, v, weight)?;
        added.push(RepairedEdge {
            from: u.clone(),
            to: v.clone(),
            weight,
            failed: failed.clone(),
        });
    }
    Ok(Repair { graph, added })
}

/// Order in which several failed nodes are repaired: most links first, then
/// ascending label.
pub fn repair_order(
    g: &CoverageGraph,
    failed: &BTreeSet<NodeId>,
) -> Result<Vec<NodeId>, TopologyError> {
    let mut order = failed
        .iter()
        .map(|n| Ok((g.degree(n)?, n.clone())))
        .collect::<Result<Vec<_>, TopologyError>>()?;
    order.sort_by(|(da, a), (db, b)| db.cmp(da).then_with(|| a.cmp(b)));
    Ok(order.into_iter().map(|(_, n)| n).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::fixtures::*;
    use crate::topology::{apply_threshold, build_adjacency};
    use proptest::prelude::*;
    use std::collections::VecDeque;

    fn set(labels: &[&str]) -> BTreeSet<NodeId> {
        labels.iter().map(|l| NodeId::from(*l)).collect()
    }

    fn reachable_nodes(g: &CoverageGraph) -> BTreeSet<NodeId> {
        g.component_of(&"S".into()).unwrap()
    }

    #[test]
    fn sweep_without_failures_marks_reachable_nodes_active() {
        let g = coverage();
        let sweep = ping_sweep(&g, &"S".into(), &BTreeSet::new()).unwrap();
        assert_eq!(sweep.statuses.len(), 11);
        assert!(sweep.statuses.iter().all(|s| s.state == NodeState::Active));
        assert_eq!(sweep.unreachable, ids(&["j", "k", "l", "m"]));
        // D sits 8 ticks from S, so its answer returns at 16
        let d = sweep.pings.iter().find(|p| p.node.as_str() == "D").unwrap();
        assert_eq!(d.response_tick, Some(16));
        assert_eq!(d.deadline, 17);
    }

    #[test]
    fn sweep_marks_failed_node_inactive() {
        let g = coverage();
        let sweep = ping_sweep(&g, &"S".into(), &set(&["e"])).unwrap();
        assert_eq!(sweep.inactive(), set(&["e"]));
        assert_eq!(sweep.active().len(), 10);
        let e = sweep.pings.iter().find(|p| p.node.as_str() == "e").unwrap();
        assert_eq!(e.response_tick, None);
    }

    #[test]
    fn sweep_reports_isolated_failures_without_pinging() {
        let g = coverage();
        let sweep = ping_sweep(&g, &"S".into(), &set(&["m"])).unwrap();
        assert!(sweep.inactive().contains(&NodeId::from("m")));
        assert!(sweep.pings.iter().all(|p| p.node.as_str() != "m"));
    }

    #[test]
    fn sweep_edge_cases() {
        let empty = apply_threshold(&build_adjacency(&[], &[]).unwrap(), 1).unwrap();
        let sweep = ping_sweep(&empty, &"S".into(), &BTreeSet::new()).unwrap();
        assert!(sweep.statuses.is_empty());
        assert_eq!(
            ping_sweep(&coverage(), &"S".into(), &set(&["zz"])),
            Err(TopologyError::UnknownNode("zz".into()))
        );
    }

    #[test]
    fn connection_table_for_the_reachable_network() {
        let g = coverage();
        let table = build_connection_table(&g, &reachable_nodes(&g)).unwrap();
        let got: Vec<(&str, usize, usize)> = table
            .entries()
            .iter()
            .map(|e| (e.node.as_str(), e.links, e.priority))
            .collect();
        assert_eq!(
            got,
            vec![
                ("c", 4, 1),
                ("e", 3, 2),
                ("f", 3, 3),
                ("g", 3, 4),
                ("D", 2, 5),
                ("a", 2, 6),
                ("b", 2, 7),
                ("d", 2, 8),
                ("h", 2, 9),
                ("i", 2, 10),
                ("S", 1, 11),
            ]
        );
    }

    #[test]
    fn single_node_table() {
        let g = apply_threshold(&build_adjacency(&ids(&["x"]), &[]).unwrap(), 2).unwrap();
        let table = build_connection_table(&g, &set(&["x"])).unwrap();
        assert_eq!(
            table.entries(),
            &[ConnectionEntry {
                node: "x".into(),
                links: 0,
                priority: 1
            }]
        );
    }

    #[test]
    fn repairs_around_e() {
        let g = coverage();
        let table = build_connection_table(&g, &reachable_nodes(&g)).unwrap();
        let repair = repair_failure(&g, &table, &"e".into()).unwrap();
        let added: Vec<(&str, &str, Weight)> = repair
            .added
            .iter()
            .map(|e| (e.from.as_str(), e.to.as_str(), e.weight))
            .collect();
        assert_eq!(added, vec![("f", "b", 3), ("b", "h", 3)]);
        assert_eq!(repair.graph.degree(&"e".into()), Ok(0));
        let comp = repair.graph.component_of(&"b".into()).unwrap();
        assert!(comp.contains(&"f".into()) && comp.contains(&"h".into()));
        // input untouched
        assert_eq!(g.degree(&"e".into()), Ok(3));
    }

    #[test]
    fn repair_with_zero_or_one_neighbor_adds_nothing() {
        let g = coverage();
        let table = build_connection_table(&g, &reachable_nodes(&g)).unwrap();
        let lonely = repair_failure(&g, &table, &"j".into()).unwrap();
        assert!(lonely.added.is_empty());
        assert_eq!(lonely.graph, g);
        let leaf = repair_failure(&g, &table, &"S".into()).unwrap();
        assert!(leaf.added.is_empty());
        assert_eq!(leaf.graph.degree(&"a".into()), Ok(1));
    }

    #[test]
    fn repair_keeps_existing_links() {
        // x-y already linked with weight 1; failing z must not overwrite it
        let adj = build_adjacency(
            &ids(&["x", "y", "z"]),
            &[edge("x", "y", 1), edge("x", "z", 2), edge("y", "z", 2)],
        )
        .unwrap();
        let g = apply_threshold(&adj, 5).unwrap();
        let table = build_connection_table(&g, &set(&["x", "y", "z"])).unwrap();
        let repair = repair_failure(&g, &table, &"z".into()).unwrap();
        assert!(repair.added.is_empty());
        assert_eq!(repair.graph.weight(&"x".into(), &"y".into()), 1);
    }

    #[test]
    fn repair_unknown_node() {
        let g = coverage();
        assert_eq!(
            repair_failure(&g, &ConnectionTable::default(), &"zz".into()),
            Err(TopologyError::UnknownNode("zz".into()))
        );
    }

    #[test]
    fn repair_order_prefers_more_links() {
        let g = coverage();
        assert_eq!(
            repair_order(&g, &set(&["S", "h", "c"])).unwrap(),
            ids(&["c", "h", "S"])
        );
    }

    fn connected(g: &CoverageGraph, a: &NodeId, b: &NodeId) -> bool {
        let mut seen = BTreeSet::from([a.clone()]);
        let mut queue = VecDeque::from([a.clone()]);
        while let Some(u) = queue.pop_front() {
            if &u == b {
                return true;
            }
            for v in g.labels() {
                if g.weight(&u, v) > 0 && seen.insert(v.clone()) {
                    queue.push_back(v.clone());
                }
            }
        }
        false
    }

    fn arb_graph() -> impl Strategy<Value = (CoverageGraph, usize)> {
        (2usize..=10, 2u32..=6).prop_flat_map(|(n, t)| {
            (proptest::collection::vec(0u32..6, n * (n - 1) / 2), 0..n).prop_map(
                move |(ws, failed)| {
                    let labels: Vec<NodeId> =
                        (0..n).map(|i| NodeId::new(format!("v{i}"))).collect();
                    let mut edges = Vec::new();
                    let mut k = 0;
                    for i in 0..n {
                        for j in (i + 1)..n {
                            if ws[k] > 0 {
                                edges.push((labels[i].clone(), labels[j].clone(), ws[k]));
                            }
                            k += 1;
                        }
                    }
                    let adj = build_adjacency(&labels, &edges).unwrap();
                    (apply_threshold(&adj, t).unwrap(), failed)
                },
            )
        })
    }

    proptest! {
        #[test]
        fn table_is_a_monotone_permutation((g, _) in arb_graph()) {
            let all: BTreeSet<NodeId> = g.labels().iter().cloned().collect();
            let table = build_connection_table(&g, &all).unwrap();
            let prios: BTreeSet<usize> = table.entries().iter().map(|e| e.priority).collect();
            prop_assert_eq!(prios, (1..=g.len()).collect::<BTreeSet<_>>());
            for pair in table.entries().windows(2) {
                prop_assert!(pair[0].priority < pair[1].priority);
                prop_assert!(pair[0].links > pair[1].links
                    || (pair[0].links == pair[1].links && pair[0].node < pair[1].node));
            }
        }

        #[test]
        fn repair_reconnects_neighbors((g, failed) in arb_graph()) {
            let all: BTreeSet<NodeId> = g.labels().iter().cloned().collect();
            let table = build_connection_table(&g, &all).unwrap();
            let victim = g.labels()[failed].clone();
            let former: Vec<NodeId> = g.neighbors(&victim).unwrap().into_iter().map(|(n, _)| n).collect();
            let repair = repair_failure(&g, &table, &victim).unwrap();
            let again = repair_failure(&g, &table, &victim).unwrap();
            prop_assert_eq!(&repair, &again);
            for a in &former {
                for b in &former {
                    prop_assert!(connected(&repair.graph, a, b));
                }
            }
            for (_, _, w) in repair.graph.edges() {
                prop_assert!(w < g.threshold());
            }
        }
    }
}
