#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sftp_core::{apply_threshold, build_adjacency, CoverageGraph, NodeId, Scenario, Weight};

pub fn labels(n: usize) -> Vec<NodeId> {
    (0..n)
        .map(|i| NodeId::new(((b'a' + i as u8) as char).to_string()))
        .collect()
}

/// Random connected edge list: a random spanning tree plus extra links,
/// weights drawn from `weights`.
pub fn connected_edges(
    rng: &mut ChaCha8Rng,
    nodes: &[NodeId],
    weights: std::ops::RangeInclusive<Weight>,
) -> Vec<(NodeId, NodeId, Weight)> {
    let n = nodes.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut present = BTreeSet::new();
    let mut edges = Vec::new();
    for k in 1..n {
        let parent = order[rng.gen_range(0..k)];
        let child = order[k];
        present.insert((parent.min(child), parent.max(child)));
    }
    let density: f64 = rng.gen_range(0.0..0.6);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen_bool(density) {
                present.insert((i, j));
            }
        }
    }
    for (i, j) in present {
        edges.push((
            nodes[i].clone(),
            nodes[j].clone(),
            rng.gen_range(weights.clone()),
        ));
    }
    edges
}

pub fn connected_graph(
    rng: &mut ChaCha8Rng,
    n: usize,
    max_weight: Weight,
    threshold: Weight,
) -> CoverageGraph {
    let nodes = labels(n);
    let edges = connected_edges(rng, &nodes, 1..=max_weight);
    apply_threshold(&build_adjacency(&nodes, &edges).unwrap(), threshold).unwrap()
}

/// Scenario over a random connected graph, endpoints `a` and the last
/// label, all links inside coverage.
pub fn random_scenario(rng: &mut ChaCha8Rng, n: usize, malicious: usize) -> Scenario {
    let nodes = labels(n);
    let edges = connected_edges(rng, &nodes, 1..=4);
    let source = nodes[0].clone();
    let dest = nodes[n - 1].clone();
    let mut middle: Vec<NodeId> = nodes[1..n - 1].to_vec();
    middle.shuffle(rng);
    Scenario {
        nodes,
        edges,
        threshold: 5,
        source,
        dest,
        failed: BTreeSet::new(),
        malicious: middle.into_iter().take(malicious).collect(),
        delayers: Default::default(),
        packet_count: rng.gen_range(1..=3),
        payload_size: 64,
        collision_mode: Default::default(),
        seed: rng.gen(),
    }
}

/// Exhaustive simple-path search: least total weight, ties to the smallest
/// label sequence.
pub fn best_path(g: &CoverageGraph, s: &NodeId, d: &NodeId) -> Option<(u64, Vec<NodeId>)> {
    fn walk(
        g: &CoverageGraph,
        path: &mut Vec<NodeId>,
        cost: u64,
        d: &NodeId,
        best: &mut Option<(u64, Vec<NodeId>)>,
    ) {
        let u = path.last().unwrap().clone();
        if &u == d {
            let cand = (cost, path.clone());
            if best.as_ref().is_none_or(|b| cand < *b) {
                *best = Some(cand);
            }
            return;
        }
        for v in g.labels() {
            let w = g.weight(&u, v);
            if w > 0 && !path.contains(v) {
                path.push(v.clone());
                walk(g, path, cost + u64::from(w), d, best);
                path.pop();
            }
        }
    }
    let mut best = None;
    walk(g, &mut vec![s.clone()], 0, d, &mut best);
    best
}

/// Breadth-first reachability straight off the matrix.
pub fn reachable(g: &CoverageGraph, a: &NodeId, b: &NodeId) -> bool {
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
