//! Fully dynamic single-source shortest paths over the vertex-centric runtime.
//!
//! Edge additions relax distances downstream exactly like an increment-only
//! algorithm: the tail offers `distance + weight` to the head, and a strictly
//! shorter offer is adopted and fanned out. Each vertex also tracks its tree
//! successors so that a deletion can find everything that hung below the
//! removed edge.
//!
//! Deletions run in two phases, each closed by an epoch:
//!
//! 1. Invalidation. If the deleted edge was a tree edge, its head receives
//!    `SetToInfinity`, which floods the subtree below it. Every reached vertex
//!    drops to infinity, forgets its tree links and is marked.
//! 2. Recomputation. Every marked vertex sends `DistanceQuery` to each of its
//!    incoming neighbours. Reachable neighbours answer with a `DistanceUpdate`
//!    and ordinary relaxation settles the subtree again.
//!
//! Only one deletion is ever in flight, and never concurrently with additions.

use crate::error::Result;
use crate::graph::{VertexId, Weight, INFINITY};
use crate::message::{AlgoMessage, Body, MessageKind};
use crate::runtime::{Command, Outbox, Runtime, RuntimeStats, Worker};

impl Worker {
    /// The tail of a new edge tells the head about the path through it.
    /// Nothing is sent from an unreachable tail.
    pub(crate) fn on_edge_addition(
        &mut self,
        u: VertexId,
        dst: VertexId,
        weight: Weight,
        out: &mut Outbox,
    ) {
        let distance = self.partition.vertex_mut(u).distance;
        if distance != INFINITY {
            out.send(AlgoMessage::new(u, dst, Body::DistanceUpdate(distance + weight)));
        }
    }

    /// Runs at the tail after the edge was removed from its out-edges.
    pub(crate) fn on_edge_deletion(&mut self, u: VertexId, dst: VertexId, out: &mut Outbox) {
        let state = self.partition.vertex_mut(u);
        if state.successors.remove(&dst) {
            out.send(AlgoMessage::new(u, dst, Body::SetToInfinity));
        }
    }

    pub(crate) fn on_distance_update(
        &mut self,
        v: VertexId,
        from: VertexId,
        dist: Weight,
        out: &mut Outbox,
    ) {
        let state = self.partition.vertex_mut(v);
        // Strictly shorter only: the incumbent predecessor wins ties.
        if dist >= state.distance {
            return;
        }
        state.distance = dist;
        if let Some(old) = state.predecessor.replace(from) {
            out.send(AlgoMessage::new(v, old, Body::RemoveFromSuccessor));
        }
        out.send(AlgoMessage::new(v, from, Body::AddToSuccessor));
        for edge in state.out_edges() {
            out.send(AlgoMessage::new(
                v,
                edge.destination,
                Body::DistanceUpdate(dist + edge.weight),
            ));
        }
        self.stats.accepted_updates += 1;
    }

    pub(crate) fn on_add_to_successor(&mut self, v: VertexId, from: VertexId) {
        self.partition.vertex_mut(v).successors.insert(from);
    }

    pub(crate) fn on_remove_from_successor(&mut self, v: VertexId, from: VertexId) {
        self.partition.vertex_mut(v).successors.remove(&from);
    }

    pub(crate) fn on_set_to_infinity(&mut self, v: VertexId, out: &mut Outbox) {
        let index = self.partition.index_of(v);
        let (_, state) = self.partition.by_index_mut(index);
        state.distance = INFINITY;
        for &w in &state.successors {
            out.send(AlgoMessage::new(v, w, Body::SetToInfinity));
        }
        state.successors.clear();
        state.predecessor = None;
        if !state.marked_infinity {
            state.marked_infinity = true;
            self.affected.push(index);
        }
    }

    /// Answers with the path through `v` if `v` is reachable.
    pub(crate) fn on_distance_query(
        &mut self,
        v: VertexId,
        from: VertexId,
        out: &mut Outbox,
    ) -> Result<()> {
        let distance = self.partition.vertex_mut(v).distance;
        if distance != INFINITY {
            let weight = self.partition.edge_weight(v, from)?;
            out.send(AlgoMessage::new(v, from, Body::DistanceUpdate(distance + weight)));
        }
        Ok(())
    }

    /// Every vertex marked during invalidation asks all incoming neighbours
    /// for an offer, then drops its mark.
    pub(crate) fn recompute_marked(&mut self, out: &mut Outbox) {
        for index in std::mem::take(&mut self.affected) {
            let (x, state) = self.partition.by_index_mut(index);
            for &p in &state.incoming {
                out.send(AlgoMessage::new(x, p, Body::DistanceQuery));
            }
            state.marked_infinity = false;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeletionPhase {
    #[default]
    Idle,
    Invalidation,
    Recomputation,
}

/// What one edge deletion cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DeletionReport {
    /// The deleted edge carried a tree link.
    pub tree_edge: bool,
    /// Edges in the graph just before the deletion.
    pub edges_before: u64,
    /// Size of the invalidated subtree.
    pub affected: u64,
    /// Messages handled during the invalidation drain, by [`MessageKind`].
    pub invalidation: [u64; 5],
    /// Messages handled during the recomputation drain, by [`MessageKind`].
    pub recomputation: [u64; 5],
}

impl DeletionReport {
    pub fn set_to_infinity(&self) -> u64 {
        self.invalidation[MessageKind::SetToInfinity as usize]
    }

    /// Messages other than `SetToInfinity` handled while invalidating.
    pub fn invalidation_leaks(&self) -> u64 {
        self.invalidation.iter().sum::<u64>() - self.set_to_infinity()
    }
}

/// Deletes `u -> v` under the two-phase protocol and leaves ingestion paused
/// at quiescence; the caller resumes.
pub fn process_edge_deletion(
    rt: &mut Runtime,
    phase: &mut DeletionPhase,
    u: VertexId,
    v: VertexId,
) -> Result<DeletionReport> {
    rt.enforce_epoch()?;
    let before: RuntimeStats = rt.stats();

    *phase = DeletionPhase::Invalidation;
    rt.post(Command::UnlinkIncoming { head: v, tail: u })?;
    rt.post(Command::RemoveOutEdge {
        src: u,
        dst: v,
        invalidate: true,
    })?;
    rt.enforce_epoch()?;
    let invalidated = rt.stats();

    let mut report = DeletionReport {
        tree_edge: invalidated.marked > 0,
        edges_before: before.edges,
        affected: invalidated.marked,
        invalidation: invalidated.processed_since(&before),
        recomputation: [0; 5],
    };

    if invalidated.marked > 0 {
        *phase = DeletionPhase::Recomputation;
        rt.broadcast(|| Command::Recompute)?;
        rt.enforce_epoch()?;
        report.recomputation = rt.stats().processed_since(&invalidated);
    }
    *phase = DeletionPhase::Idle;
    Ok(report)
}
