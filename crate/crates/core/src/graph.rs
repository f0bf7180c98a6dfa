//! Partitioned adjacency storage and per-vertex algorithm state.
//!
//! Every vertex lives in exactly one [`GraphPartition`], chosen by
//! [`partition_of`]. A partition stores the vertex's outgoing edges, the set
//! of vertices with an edge into it, and the shortest-path bookkeeping used by
//! the handlers in [`crate::sssp`]. Partitions are never shared: the worker
//! that owns one is the only code that reads or mutates it.

use std::fmt;

use indexmap::IndexMap;
use rustc_hash::{FxBuildHasher, FxHashSet};

use crate::error::{Error, Result};

/// External vertex identifier as it appears in the input stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub u32);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<u32> for VertexId {
    fn from(id: u32) -> Self {
        VertexId(id)
    }
}

/// Distance or edge length. Unreachable vertices sit at `f64::INFINITY`.
pub type Weight = f64;

pub const INFINITY: Weight = f64::INFINITY;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedEdge {
    pub destination: VertexId,
    pub weight: Weight,
}

/// Rejects weights that would break termination: zero, negative, NaN, infinite.
pub fn check_weight(src: VertexId, dst: VertexId, weight: Weight) -> Result<()> {
    if weight > 0.0 && weight.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidWeight { src, dst, weight })
    }
}

/// Index of the worker that owns `vertex` among `workers` partitions.
///
/// Fibonacci hashing spreads dense id ranges evenly; the mapping depends only
/// on the id and the worker count.
pub fn partition_of(vertex: VertexId, workers: usize) -> usize {
    debug_assert!(workers > 0);
    let mixed = (vertex.0 as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    ((mixed >> 32) % workers as u64) as usize
}

type OutEdges = IndexMap<VertexId, Weight, FxBuildHasher>;

#[derive(Debug, Clone)]
pub struct VertexState {
    pub distance: Weight,
    pub predecessor: Option<VertexId>,
    pub successors: FxHashSet<VertexId>,
    pub incoming: FxHashSet<VertexId>,
    pub marked_infinity: bool,
    out_edges: OutEdges,
}

impl Default for VertexState {
    fn default() -> Self {
        VertexState {
            distance: INFINITY,
            predecessor: None,
            successors: FxHashSet::default(),
            incoming: FxHashSet::default(),
            marked_infinity: false,
            out_edges: OutEdges::default(),
        }
    }
}

impl VertexState {
    pub fn out_edges(&self) -> impl ExactSizeIterator<Item = WeightedEdge> + '_ {
        self.out_edges
            .iter()
            .map(|(&destination, &weight)| WeightedEdge {
                destination,
                weight,
            })
    }

    pub fn out_degree(&self) -> usize {
        self.out_edges.len()
    }

    pub fn edge_to(&self, destination: VertexId) -> Option<Weight> {
        self.out_edges.get(&destination).copied()
    }

    pub fn is_reachable(&self) -> bool {
        self.distance != INFINITY
    }

    /// Drops all shortest-path state, keeping topology.
    pub fn reset_path_state(&mut self) {
        self.distance = INFINITY;
        self.predecessor = None;
        self.successors.clear();
        self.marked_infinity = false;
    }
}

/// The vertices owned by one worker, addressed by a dense local index.
#[derive(Debug, Clone)]
pub struct GraphPartition {
    owner: usize,
    workers: usize,
    source: VertexId,
    vertices: IndexMap<VertexId, VertexState, FxBuildHasher>,
    edge_count: usize,
}

impl GraphPartition {
    /// Creates partition `owner` of `workers`. The partition owning `source`
    /// creates it immediately at distance 0.
    pub fn new(owner: usize, workers: usize, source: VertexId) -> Self {
        assert!(owner < workers, "partition {owner} out of range for {workers} workers");
        let mut partition = GraphPartition {
            owner,
            workers,
            source,
            vertices: IndexMap::default(),
            edge_count: 0,
        };
        if partition.owns(source) {
            partition.vertex_mut(source).distance = 0.0;
        }
        partition
    }

    /// A single partition holding the whole graph.
    pub fn whole(source: VertexId) -> Self {
        Self::new(0, 1, source)
    }

    pub fn owner(&self) -> usize {
        self.owner
    }

    pub fn source(&self) -> VertexId {
        self.source
    }

    pub fn owns(&self, vertex: VertexId) -> bool {
        partition_of(vertex, self.workers) == self.owner
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Number of out-edges stored here (edges whose tail is owned).
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn vertex(&self, vertex: VertexId) -> Option<&VertexState> {
        self.vertices.get(&vertex)
    }

    /// Returns the state of `vertex`, creating it on first reference.
    pub fn vertex_mut(&mut self, vertex: VertexId) -> &mut VertexState {
        debug_assert!(self.owns(vertex), "vertex {vertex} routed to wrong partition");
        self.vertices.entry(vertex).or_default()
    }

    pub(crate) fn index_of(&mut self, vertex: VertexId) -> usize {
        self.vertices.entry(vertex).or_default();
        self.vertices.get_index_of(&vertex).expect("just inserted")
    }

    pub(crate) fn by_index_mut(&mut self, index: usize) -> (VertexId, &mut VertexState) {
        let (&id, state) = self.vertices.get_index_mut(index).expect("stable index");
        (id, state)
    }

    pub fn iter(&self) -> impl Iterator<Item = (VertexId, &VertexState)> + '_ {
        self.vertices.iter().map(|(&id, state)| (id, state))
    }

    pub(crate) fn iter_mut(&mut self) -> impl Iterator<Item = (VertexId, &mut VertexState)> + '_ {
        self.vertices.iter_mut().map(|(&id, state)| (id, state))
    }

    /// Stores edge `src -> dst` at its tail. Returns false if it already exists;
    /// the first weight wins.
    pub fn insert_out_edge(&mut self, src: VertexId, dst: VertexId, weight: Weight) -> Result<bool> {
        check_weight(src, dst, weight)?;
        let out = &mut self.vertex_mut(src).out_edges;
        if out.contains_key(&dst) {
            return Ok(false);
        }
        out.insert(dst, weight);
        self.edge_count += 1;
        Ok(true)
    }

    /// Records `tail` in the incoming set of `head`.
    pub fn link_incoming(&mut self, head: VertexId, tail: VertexId) {
        self.vertex_mut(head).incoming.insert(tail);
    }

    pub fn remove_out_edge(&mut self, src: VertexId, dst: VertexId) -> Result<WeightedEdge> {
        let removed = self
            .vertices
            .get_mut(&src)
            .and_then(|state| state.out_edges.swap_remove(&dst));
        match removed {
            Some(weight) => {
                self.edge_count -= 1;
                Ok(WeightedEdge {
                    destination: dst,
                    weight,
                })
            }
            None => Err(Error::StreamConsistency { src, dst }),
        }
    }

    pub fn unlink_incoming(&mut self, head: VertexId, tail: VertexId) {
        self.vertex_mut(head).incoming.remove(&tail);
    }

    /// Adds `src -> dst` when this partition owns both endpoints.
    pub fn add_edge(&mut self, src: VertexId, dst: VertexId, weight: Weight) -> Result<bool> {
        let added = self.insert_out_edge(src, dst, weight)?;
        self.link_incoming(dst, src);
        Ok(added)
    }

    /// Removes `src -> dst` when this partition owns both endpoints.
    pub fn delete_edge(&mut self, src: VertexId, dst: VertexId) -> Result<WeightedEdge> {
        let removed = self.remove_out_edge(src, dst)?;
        self.unlink_incoming(dst, src);
        Ok(removed)
    }

    pub fn edge_weight(&self, src: VertexId, dst: VertexId) -> Result<Weight> {
        self.vertices
            .get(&src)
            .and_then(|state| state.edge_to(dst))
            .ok_or(Error::MissingEdge { src, dst })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const S: VertexId = VertexId(0);

    fn v(id: u32) -> VertexId {
        VertexId(id)
    }

    /// Full-scan check that out-edge lists and incoming sets mirror each other.
    fn assert_adjacency_mirrored(g: &GraphPartition) {
        for (tail, state) in g.iter() {
            for edge in state.out_edges() {
                assert!(g.vertex(edge.destination).unwrap().incoming.contains(&tail));
            }
        }
        for (head, state) in g.iter() {
            for &tail in &state.incoming {
                assert!(g.vertex(tail).unwrap().edge_to(head).is_some());
            }
        }
    }

    #[test]
    fn first_insertion_links_incoming() {
        let mut g = GraphPartition::whole(S);
        assert!(g.add_edge(v(1), v(2), 3.0).unwrap());
        assert_eq!(g.vertex(v(2)).unwrap().incoming, [v(1)].into_iter().collect());
    }

    #[test]
    fn duplicate_insertion_is_dropped() {
        let mut g = GraphPartition::whole(S);
        assert!(g.add_edge(v(1), v(2), 3.0).unwrap());
        assert!(!g.add_edge(v(1), v(2), 7.0).unwrap());
        assert_eq!(g.edge_weight(v(1), v(2)).unwrap(), 3.0);
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn self_loop_is_stored() {
        let mut g = GraphPartition::whole(S);
        assert!(g.add_edge(v(1), v(1), 2.0).unwrap());
        assert!(g.vertex(v(1)).unwrap().incoming.contains(&v(1)));
        assert_adjacency_mirrored(&g);
    }

    #[test]
    fn non_positive_weights_rejected() {
        let mut g = GraphPartition::whole(S);
        for w in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(g.add_edge(v(1), v(2), w), Err(Error::InvalidWeight { .. })));
        }
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn delete_returns_removed_weight() {
        let mut g = GraphPartition::whole(S);
        g.add_edge(v(1), v(2), 3.0).unwrap();
        let removed = g.delete_edge(v(1), v(2)).unwrap();
        assert_eq!(removed.weight, 3.0);
        assert!(g.vertex(v(2)).unwrap().incoming.is_empty());
        assert!(matches!(g.edge_weight(v(1), v(2)), Err(Error::MissingEdge { .. })));
    }

    #[test]
    fn delete_on_empty_graph_is_consistency_error() {
        let mut g = GraphPartition::whole(S);
        assert!(matches!(
            g.delete_edge(v(1), v(2)),
            Err(Error::StreamConsistency { .. })
        ));
    }

    #[test]
    fn delete_second_edge_of_chain() {
        let mut g = GraphPartition::whole(S);
        g.add_edge(v(1), v(2), 3.0).unwrap();
        g.add_edge(v(2), v(3), 1.0).unwrap();
        g.delete_edge(v(2), v(3)).unwrap();
        assert_eq!(g.vertex(v(2)).unwrap().out_degree(), 0);
        assert!(g.vertex(v(3)).unwrap().incoming.is_empty());
        assert_eq!(g.edge_weight(v(1), v(2)).unwrap(), 3.0);
    }

    #[test]
    fn random_operations_match_reference_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut g = GraphPartition::whole(S);
        let mut reference: BTreeMap<(u32, u32), f64> = BTreeMap::new();
        for _ in 0..100 {
            let (a, b) = (rng.gen_range(0..20), rng.gen_range(0..20));
            let w = rng.gen_range(0.5..4.0);
            let added = g.add_edge(v(a), v(b), w).unwrap();
            assert_eq!(added, !reference.contains_key(&(a, b)));
            reference.entry((a, b)).or_insert(w);
        }
        for _ in 0..30 {
            let (a, b) = (rng.gen_range(0..20), rng.gen_range(0..20));
            let expected = reference.remove(&(a, b));
            match (g.delete_edge(v(a), v(b)), expected) {
                (Ok(edge), Some(w)) => assert_eq!(edge.weight, w),
                (Err(Error::StreamConsistency { .. }), None) => {}
                (got, want) => panic!("delete ({a},{b}): {got:?} vs {want:?}"),
            }
        }
        for a in 0..20 {
            for b in 0..20 {
                match reference.get(&(a, b)) {
                    Some(&w) => assert_eq!(g.edge_weight(v(a), v(b)).unwrap(), w),
                    None => assert!(g.edge_weight(v(a), v(b)).is_err()),
                }
            }
        }
        assert_eq!(g.edge_count(), reference.len());
        assert_adjacency_mirrored(&g);
    }

    #[test]
    fn source_starts_at_zero_in_owning_partition() {
        let source = v(42);
        let workers = 4;
        let owner = partition_of(source, workers);
        for p in 0..workers {
            let part = GraphPartition::new(p, workers, source);
            assert_eq!(part.vertex(source).is_some(), p == owner);
        }
        let part = GraphPartition::new(owner, workers, source);
        assert_eq!(part.vertex(source).unwrap().distance, 0.0);
    }

    #[test]
    fn partitioning_is_total_and_deterministic() {
        for workers in 1..=32 {
            for id in 0..2_000u32 {
                let p = partition_of(v(id), workers);
                assert!(p < workers);
                assert_eq!(p, partition_of(v(id), workers));
            }
        }
    }

    #[test]
    fn partitioning_spreads_dense_ids() {
        let workers = 8;
        let mut counts = [0usize; 8];
        for id in 0..8_000u32 {
            counts[partition_of(v(id), workers)] += 1;
        }
        assert!(counts.iter().all(|&c| c > 700), "{counts:?}");
    }
}
