//! Ground truth for collected trees: a standalone adjacency replica, binary
//! heap Dijkstra, a structural shortest-path-tree validator and the stability
//! metric between consecutive snapshots.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::graph::{check_weight, VertexId, Weight, INFINITY};
use crate::message::TopologyEvent;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotEntry {
    pub vertex: VertexId,
    pub predecessor: Option<VertexId>,
    pub distance: Weight,
}

/// Collected shortest-path tree, one entry per vertex, sorted by vertex id.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeSnapshot {
    pub source: VertexId,
    pub event_index: u64,
    entries: Vec<SnapshotEntry>,
}

impl TreeSnapshot {
    pub fn new(source: VertexId, event_index: u64, mut entries: Vec<SnapshotEntry>) -> Self {
        entries.sort_unstable_by_key(|e| e.vertex);
        TreeSnapshot {
            source,
            event_index,
            entries,
        }
    }

    pub fn entries(&self) -> &[SnapshotEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, vertex: VertexId) -> Option<&SnapshotEntry> {
        self.entries
            .binary_search_by_key(&vertex, |e| e.vertex)
            .ok()
            .map(|i| &self.entries[i])
    }

    pub fn distance(&self, vertex: VertexId) -> Option<Weight> {
        self.get(vertex).map(|e| e.distance)
    }

    /// Vertices with a finite distance, source included.
    pub fn tree_size(&self) -> usize {
        self.entries.iter().filter(|e| e.distance != INFINITY).count()
    }

    /// (vertex, distance) pairs in vertex order.
    pub fn distances(&self) -> Vec<(VertexId, Weight)> {
        self.entries.iter().map(|e| (e.vertex, e.distance)).collect()
    }
}

/// Plain adjacency replica maintained alongside a run, independent of the
/// partitioned runtime.
#[derive(Debug, Clone, Default)]
pub struct ReferenceGraph {
    out: HashMap<VertexId, HashMap<VertexId, Weight>>,
    vertices: HashSet<VertexId>,
    edges: usize,
}

impl ReferenceGraph {
    pub fn new(source: VertexId) -> Self {
        let mut g = ReferenceGraph::default();
        g.vertices.insert(source);
        g
    }

    pub fn add_edge(&mut self, src: VertexId, dst: VertexId, weight: Weight) -> Result<bool> {
        check_weight(src, dst, weight)?;
        self.vertices.insert(src);
        self.vertices.insert(dst);
        let out = self.out.entry(src).or_default();
        if out.contains_key(&dst) {
            return Ok(false);
        }
        out.insert(dst, weight);
        self.edges += 1;
        Ok(true)
    }

    pub fn delete_edge(&mut self, src: VertexId, dst: VertexId) -> Result<Weight> {
        let weight = self
            .out
            .get_mut(&src)
            .and_then(|m| m.remove(&dst))
            .ok_or(Error::StreamConsistency { src, dst })?;
        self.edges -= 1;
        Ok(weight)
    }

    /// Applies an add or delete; markers are ignored.
    pub fn apply(&mut self, event: &TopologyEvent) -> Result<()> {
        match *event {
            TopologyEvent::AddEdge {
                src, dst, weight, ..
            } => self.add_edge(src, dst, weight).map(drop),
            TopologyEvent::DeleteEdge { src, dst, .. } => self.delete_edge(src, dst).map(drop),
            TopologyEvent::QueryMarker { .. } => Ok(()),
        }
    }

    pub fn weight(&self, src: VertexId, dst: VertexId) -> Option<Weight> {
        self.out.get(&src).and_then(|m| m.get(&dst)).copied()
    }

    pub fn out_edges(&self, src: VertexId) -> impl Iterator<Item = (VertexId, Weight)> + '_ {
        self.out
            .get(&src)
            .into_iter()
            .flat_map(|m| m.iter().map(|(&d, &w)| (d, w)))
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices.iter().copied()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn contains_vertex(&self, v: VertexId) -> bool {
        self.vertices.contains(&v)
    }
}

#[derive(Copy, Clone, PartialEq)]
struct HeapItem {
    distance: Weight,
    vertex: VertexId,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on distance, ties by vertex id.
        other
            .distance
            .total_cmp(&self.distance)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Exact single-source shortest paths with a binary heap.
pub fn dijkstra(graph: &ReferenceGraph, source: VertexId) -> TreeSnapshot {
    let mut dist: HashMap<VertexId, Weight> = HashMap::with_capacity(graph.vertex_count());
    let mut pred: HashMap<VertexId, VertexId> = HashMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(source, 0.0);
    heap.push(HeapItem {
        distance: 0.0,
        vertex: source,
    });
    while let Some(HeapItem { distance, vertex }) = heap.pop() {
        if distance > dist[&vertex] {
            continue;
        }
        for (next, w) in graph.out_edges(vertex) {
            let candidate = distance + w;
            let best = dist.get(&next).copied().unwrap_or(INFINITY);
            if candidate < best {
                dist.insert(next, candidate);
                pred.insert(next, vertex);
                heap.push(HeapItem {
                    distance: candidate,
                    vertex: next,
                });
            }
        }
    }
    let mut entries: Vec<SnapshotEntry> = graph
        .vertices()
        .chain(std::iter::once(source))
        .collect::<HashSet<_>>()
        .into_iter()
        .map(|vertex| SnapshotEntry {
            vertex,
            predecessor: pred.get(&vertex).copied(),
            distance: dist.get(&vertex).copied().unwrap_or(INFINITY),
        })
        .collect();
    entries.sort_unstable_by_key(|e| e.vertex);
    TreeSnapshot::new(source, 0, entries)
}

/// Which tree property a snapshot broke first.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Vertex sets of snapshot and graph differ.
    VertexSet { vertex: VertexId, in_snapshot: bool },
    /// Source must sit at distance 0 with no predecessor.
    Source { distance: Weight, predecessor: Option<VertexId> },
    /// A finite-distance non-source vertex has no predecessor, or an
    /// unreachable one has a predecessor.
    PredecessorPresence { vertex: VertexId },
    /// Check 1: the predecessor edge is not in the graph.
    MissingTreeEdge { vertex: VertexId, predecessor: VertexId },
    /// Check 2: distance is not predecessor distance plus edge weight.
    EdgeSum {
        vertex: VertexId,
        distance: Weight,
        expected: Weight,
    },
    /// Check 3: following predecessors from this vertex never reaches the source.
    Cycle { vertex: VertexId },
    /// Check 4: distance differs from Dijkstra.
    Distance {
        vertex: VertexId,
        distance: Weight,
        expected: Weight,
    },
}

impl Violation {
    pub fn vertex(&self) -> Option<VertexId> {
        match *self {
            Violation::VertexSet { vertex, .. }
            | Violation::PredecessorPresence { vertex }
            | Violation::MissingTreeEdge { vertex, .. }
            | Violation::EdgeSum { vertex, .. }
            | Violation::Cycle { vertex }
            | Violation::Distance { vertex, .. } => Some(vertex),
            Violation::Source { .. } => None,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::VertexSet {
                vertex,
                in_snapshot: true,
            } => write!(f, "vertex {vertex} in snapshot but not in graph"),
            Violation::VertexSet { vertex, .. } => {
                write!(f, "vertex {vertex} in graph but missing from snapshot")
            }
            Violation::Source {
                distance,
                predecessor,
            } => write!(f, "source at distance {distance} with predecessor {predecessor:?}"),
            Violation::PredecessorPresence { vertex } => {
                write!(f, "vertex {vertex}: predecessor presence disagrees with distance")
            }
            Violation::MissingTreeEdge {
                vertex,
                predecessor,
            } => write!(f, "vertex {vertex}: tree edge {predecessor}->{vertex} not in graph"),
            Violation::EdgeSum {
                vertex,
                distance,
                expected,
            } => write!(f, "vertex {vertex}: distance {distance} but predecessor offers {expected}"),
            Violation::Cycle { vertex } => {
                write!(f, "vertex {vertex}: predecessor chain does not reach the source")
            }
            Violation::Distance {
                vertex,
                distance,
                expected,
            } => write!(f, "vertex {vertex}: distance {distance}, shortest is {expected}"),
        }
    }
}

/// Relative tolerance used only if exact distance equality fails.
pub const FALLBACK_RELATIVE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violation: Option<Violation>,
    /// Vertices whose distance matched Dijkstra only within the fallback tolerance.
    pub tolerance_fallbacks: usize,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

/// Checks that `snap` is a shortest-path tree of `graph` rooted at `source`:
/// tree edges exist, distances add up along them exactly, every finite vertex
/// reaches the source, and distances match Dijkstra.
pub fn validate_tree(
    snap: &TreeSnapshot,
    graph: &ReferenceGraph,
    source: VertexId,
) -> ValidationReport {
    let mut report = ValidationReport::default();
    report.violation = find_violation(snap, graph, source, &mut report.tolerance_fallbacks);
    if report.tolerance_fallbacks > 0 {
        log::warn!(
            "{} distances matched only within relative tolerance {FALLBACK_RELATIVE_TOLERANCE}",
            report.tolerance_fallbacks
        );
    }
    report
}

fn find_violation(
    snap: &TreeSnapshot,
    graph: &ReferenceGraph,
    source: VertexId,
    fallbacks: &mut usize,
) -> Option<Violation> {
    for e in snap.entries() {
        if !graph.contains_vertex(e.vertex) {
            return Some(Violation::VertexSet {
                vertex: e.vertex,
                in_snapshot: true,
            });
        }
    }
    if let Some(dup) = snap.entries().windows(2).find(|w| w[0].vertex == w[1].vertex) {
        return Some(Violation::VertexSet {
            vertex: dup[0].vertex,
            in_snapshot: true,
        });
    }
    if let Some(missing) = graph.vertices().filter(|v| snap.get(*v).is_none()).min() {
        return Some(Violation::VertexSet {
            vertex: missing,
            in_snapshot: false,
        });
    }

    match snap.get(source) {
        Some(e) if e.distance == 0.0 && e.predecessor.is_none() => {}
        Some(e) => {
            return Some(Violation::Source {
                distance: e.distance,
                predecessor: e.predecessor,
            })
        }
        None => {
            return Some(Violation::VertexSet {
                vertex: source,
                in_snapshot: false,
            })
        }
    }

    for e in snap.entries() {
        if e.vertex == source {
            continue;
        }
        match e.predecessor {
            None if e.distance != INFINITY => {
                return Some(Violation::PredecessorPresence { vertex: e.vertex })
            }
            None => {}
            Some(_) if e.distance == INFINITY => {
                return Some(Violation::PredecessorPresence { vertex: e.vertex })
            }
            Some(p) => {
                let Some(w) = graph.weight(p, e.vertex) else {
                    return Some(Violation::MissingTreeEdge {
                        vertex: e.vertex,
                        predecessor: p,
                    });
                };
                let expected = snap.distance(p).unwrap_or(INFINITY) + w;
                if e.distance != expected {
                    return Some(Violation::EdgeSum {
                        vertex: e.vertex,
                        distance: e.distance,
                        expected,
                    });
                }
            }
        }
    }

    // Check 3: with positive weights and exact edge sums, predecessor
    // distances strictly decrease, but a chain can still loop if rounding
    // made two sums equal. Walk chains with memoisation.
    let mut reaches: HashMap<VertexId, bool> = HashMap::new();
    reaches.insert(source, true);
    for e in snap.entries() {
        if e.predecessor.is_none() {
            continue;
        }
        let mut path = Vec::new();
        let mut on_path = HashSet::new();
        let mut cur = e.vertex;
        let ok = loop {
            if let Some(&known) = reaches.get(&cur) {
                break known;
            }
            if !on_path.insert(cur) {
                break false;
            }
            path.push(cur);
            match snap.get(cur).and_then(|x| x.predecessor) {
                Some(p) => cur = p,
                None => break cur == source,
            }
        };
        for v in path {
            reaches.insert(v, ok);
        }
        if !ok {
            return Some(Violation::Cycle { vertex: e.vertex });
        }
    }

    let truth = dijkstra(graph, source);
    for (e, t) in snap.entries().iter().zip(truth.entries()) {
        debug_assert_eq!(e.vertex, t.vertex);
        if e.distance == t.distance {
            continue;
        }
        let close = e.distance.is_finite()
            && t.distance.is_finite()
            && (e.distance - t.distance).abs()
                <= FALLBACK_RELATIVE_TOLERANCE * e.distance.abs().max(t.distance.abs());
        if close {
            *fallbacks += 1;
            continue;
        }
        return Some(Violation::Distance {
            vertex: e.vertex,
            distance: e.distance,
            expected: t.distance,
        });
    }
    None
}

/// Percentage of vertices present in both snapshots whose predecessor is
/// unchanged. Two missing predecessors count as unchanged; an empty
/// intersection yields 100.
pub fn stability(prev: &TreeSnapshot, cur: &TreeSnapshot) -> f64 {
    let (mut common, mut same) = (0u64, 0u64);
    let (a, b) = (prev.entries(), cur.entries());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].vertex.cmp(&b[j].vertex) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                common += 1;
                if a[i].predecessor == b[j].predecessor {
                    same += 1;
                }
                i += 1;
                j += 1;
            }
        }
    }
    if common == 0 {
        100.0
    } else {
        100.0 * same as f64 / common as f64
    }
}
