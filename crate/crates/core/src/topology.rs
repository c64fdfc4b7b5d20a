//! Weighted adjacency matrices and the Wi-Fi coverage graph.
//!
//! A network is described by a dense, symmetric matrix of link ranges.
//! Thresholding that matrix yields the [`CoverageGraph`]: only links whose
//! range is strictly below the threshold stay in coverage.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Link range in abstract range units. Doubles as propagation delay in ticks.
pub type Weight = u32;

/// Printable node label. Ordering is plain byte-wise lexicographic and is
/// used for every tie-break in the simulator.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(label: impl Into<String>) -> Self {
        NodeId(label.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId::new(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopologyError {
    #[error("duplicate node label `{0}`")]
    DuplicateNode(NodeId),
    #[error("node label must be non-empty")]
    EmptyLabel,
    #[error("self-loop on node `{0}`")]
    SelfLoop(NodeId),
    #[error("edge {0}-{1} listed more than once")]
    DuplicateEdge(NodeId, NodeId),
    #[error("edge {0}-{1} has non-positive weight")]
    NonPositiveWeight(NodeId, NodeId),
    #[error("unknown node `{0}`")]
    UnknownNode(NodeId),
    #[error("threshold must be at least 1, got {0}")]
    InvalidThreshold(Weight),
    #[error("malformed matrix: {0}")]
    MalformedMatrix(String),
}

/// Dense symmetric matrix of link ranges; `0` means no link.
///
/// Row/column order is the order in which nodes were supplied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedAdjacency {
    labels: Vec<NodeId>,
    index: HashMap<NodeId, usize>,
    weights: Vec<Vec<Weight>>,
}

impl WeightedAdjacency {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[NodeId] {
        &self.labels
    }

    pub fn index_of(&self, node: &NodeId) -> Option<usize> {
        self.index.get(node).copied()
    }

    pub fn contains(&self, node: &NodeId) -> bool {
        self.index.contains_key(node)
    }

    /// Row-major copy of the matrix, in label order.
    pub fn rows(&self) -> &[Vec<Weight>] {
        &self.weights
    }

    /// Weight of the link between `u` and `v`, `0` if absent or unknown.
    pub fn weight(&self, u: &NodeId, v: &NodeId) -> Weight {
        match (self.index_of(u), self.index_of(v)) {
            (Some(i), Some(j)) => self.weights[i][j],
            _ => 0,
        }
    }

    pub fn weight_at(&self, i: usize, j: usize) -> Weight {
        self.weights[i][j]
    }

    /// Undirected edges as `(u, v, w)` with `u` before `v` in row order.
    pub fn edges(&self) -> Vec<(NodeId, NodeId, Weight)> {
        let mut out = Vec::new();
        for i in 0..self.len() {
            for j in (i + 1)..self.len() {
                let w = self.weights[i][j];
                if w > 0 {
                    out.push((self.labels[i].clone(), self.labels[j].clone(), w));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }

    pub fn max_weight(&self) -> Weight {
        self.weights
            .iter()
            .flat_map(|row| row.iter().copied())
            .max()
            .unwrap_or(0)
    }

    /// Rebuilds a matrix from labels and raw rows, checking shape, symmetry
    /// and the zero diagonal. Used when parsing printed matrices back in.
    #[allow(clippy::needless_range_loop)]
    pub fn from_rows(labels: Vec<NodeId>, rows: Vec<Vec<Weight>>) -> Result<Self, TopologyError> {
        let mut adj = Self::with_labels(labels)?;
        let n = adj.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(TopologyError::MalformedMatrix(format!(
                "expected {n} rows of {n} columns"
            )));
        }
        for i in 0..n {
            if rows[i][i] != 0 {
                return Err(TopologyError::SelfLoop(adj.labels[i].clone()));
            }
            for j in (i + 1)..n {
                if rows[i][j] != rows[j][i] {
                    return Err(TopologyError::MalformedMatrix(format!(
                        "entry {}-{} is not symmetric",
                        adj.labels[i], adj.labels[j]
                    )));
                }
            }
        }
        adj.weights = rows;
        Ok(adj)
    }

    fn with_labels(labels: Vec<NodeId>) -> Result<Self, TopologyError> {
        let mut index = HashMap::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            if label.as_str().is_empty() {
                return Err(TopologyError::EmptyLabel);
            }
            if index.insert(label.clone(), i).is_some() {
                return Err(TopologyError::DuplicateNode(label.clone()));
            }
        }
        let n = labels.len();
        Ok(WeightedAdjacency {
            labels,
            index,
            weights: vec![vec![0; n]; n],
        })
    }

    fn set(&mut self, i: usize, j: usize, w: Weight) {
        self.weights[i][j] = w;
        self.weights[j][i] = w;
    }
}

/// Builds the symmetric range matrix from a node list and an undirected
/// edge list.
pub fn build_adjacency(
    nodes: &[NodeId],
    edges: &[(NodeId, NodeId, Weight)],
) -> Result<WeightedAdjacency, TopologyError> {
    let mut adj = WeightedAdjacency::with_labels(nodes.to_vec())?;
    for (u, v, w) in edges {
        let i = adj
            .index_of(u)
            .ok_or_else(|| TopologyError::UnknownNode(u.clone()))?;
        let j = adj
            .index_of(v)
            .ok_or_else(|| TopologyError::UnknownNode(v.clone()))?;
        if i == j {
            return Err(TopologyError::SelfLoop(u.clone()));
        }
        if *w == 0 {
            return Err(TopologyError::NonPositiveWeight(u.clone(), v.clone()));
        }
        if adj.weights[i][j] != 0 {
            return Err(TopologyError::DuplicateEdge(u.clone(), v.clone()));
        }
        adj.set(i, j, *w);
    }
    Ok(adj)
}

/// The thresholded network: every remaining link has `0 < w < threshold`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageGraph {
    base: WeightedAdjacency,
    threshold: Weight,
}

/// Keeps links strictly shorter than `threshold`; links at or beyond it
/// fall outside Wi-Fi coverage.
pub fn apply_threshold(
    adj: &WeightedAdjacency,
    threshold: Weight,
) -> Result<CoverageGraph, TopologyError> {
    if threshold < 1 {
        return Err(TopologyError::InvalidThreshold(threshold));
    }
    let mut base = adj.clone();
    for row in base.weights.iter_mut() {
        for w in row.iter_mut() {
            if *w >= threshold {
                *w = 0;
            }
        }
    }
    Ok(CoverageGraph { base, threshold })
}

impl CoverageGraph {
    pub fn adjacency(&self) -> &WeightedAdjacency {
        &self.base
    }

    pub fn threshold(&self) -> Weight {
        self.threshold
    }

    pub fn labels(&self) -> &[NodeId] {
        self.base.labels()
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    pub fn contains(&self, node: &NodeId) -> bool {
        self.base.contains(node)
    }

    pub fn weight(&self, u: &NodeId, v: &NodeId) -> Weight {
        self.base.weight(u, v)
    }

    pub fn edges(&self) -> Vec<(NodeId, NodeId, Weight)> {
        self.base.edges()
    }

    pub fn edge_count(&self) -> usize {
        self.base.edge_count()
    }

    pub(crate) fn require(&self, node: &NodeId) -> Result<usize, TopologyError> {
        self.base
            .index_of(node)
            .ok_or_else(|| TopologyError::UnknownNode(node.clone()))
    }

    /// Neighbors of `u` in row order, with link weights.
    pub fn neighbors(&self, u: &NodeId) -> Result<Vec<(NodeId, Weight)>, TopologyError> {
        let i = self.require(u)?;
        Ok(self.base.weights[i]
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0)
            .map(|(j, w)| (self.base.labels[j].clone(), *w))
            .collect())
    }

    /// Number of communication links of `u`.
    pub fn degree(&self, u: &NodeId) -> Result<usize, TopologyError> {
        let i = self.require(u)?;
        Ok(self.base.weights[i].iter().filter(|w| **w > 0).count())
    }

    /// Connected components. Components appear in order of their first
    /// member in row order; members keep row order too.
    #[allow(clippy::needless_range_loop)]
    pub fn connected_components(&self) -> Vec<Vec<NodeId>> {
        let n = self.len();
        let mut comp = vec![usize::MAX; n];
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = groups.len();
            let mut members = vec![start];
            comp[start] = id;
            let mut queue = VecDeque::from([start]);
            while let Some(i) = queue.pop_front() {
                for j in 0..n {
                    if self.base.weights[i][j] > 0 && comp[j] == usize::MAX {
                        comp[j] = id;
                        members.push(j);
                        queue.push_back(j);
                    }
                }
            }
            members.sort_unstable();
            groups.push(members);
        }
        groups
            .into_iter()
            .map(|g| g.into_iter().map(|i| self.base.labels[i].clone()).collect())
            .collect()
    }

    /// Members of the component containing `u`.
    pub fn component_of(&self, u: &NodeId) -> Result<BTreeSet<NodeId>, TopologyError> {
        self.require(u)?;
        Ok(self
            .connected_components()
            .into_iter()
            .find(|c| c.contains(u))
            .map(|c| c.into_iter().collect())
            .unwrap_or_default())
    }

    /// Weighted shortest-path distance from `source` to every node, in row
    /// order. `None` for nodes outside the source's component.
    #[allow(clippy::needless_range_loop)]
    pub fn shortest_delays(&self, source: &NodeId) -> Result<Vec<Option<u64>>, TopologyError> {
        let s = self.require(source)?;
        let n = self.len();
        let mut dist: Vec<Option<u64>> = vec![None; n];
        dist[s] = Some(0);
        let mut heap = std::collections::BinaryHeap::from([std::cmp::Reverse((0u64, s))]);
        while let Some(std::cmp::Reverse((d, i))) = heap.pop() {
            if dist[i].is_some_and(|best| d > best) {
                continue;
            }
            for j in 0..n {
                let w = self.base.weights[i][j];
                if w == 0 {
                    continue;
                }
                let nd = d + u64::from(w);
                if dist[j].is_none_or(|best| nd < best) {
                    dist[j] = Some(nd);
                    heap.push(std::cmp::Reverse((nd, j)));
                }
            }
        }
        Ok(dist)
    }

    /// Copy with every link of `u` removed. `u` stays in the matrix.
    pub(crate) fn without_links_of(&self, u: &NodeId) -> Result<CoverageGraph, TopologyError> {
        let i = self.require(u)?;
        let mut out = self.clone();
        for j in 0..out.len() {
            out.base.set(i, j, 0);
        }
        Ok(out)
    }

    pub(crate) fn set_weight(
        &mut self,
        u: &NodeId,
        v: &NodeId,
        w: Weight,
    ) -> Result<(), TopologyError> {
        let i = self.require(u)?;
        let j = self.require(v)?;
        debug_assert!(i != j && w < self.threshold);
        self.base.set(i, j, w);
        Ok(())
    }
}
