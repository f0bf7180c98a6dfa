//! Recompute-from-scratch comparison engine.
//!
//! The baseline keeps topology only. On a query it pauses ingestion, runs
//! increment-only relaxation from the source over the current graph using the
//! same runtime and the same `DistanceUpdate` handler, and collects the result.
//! Path state is wiped again right after collection, so nothing algorithmic
//! survives between queries.

use crate::error::Result;
use crate::graph::INFINITY;
use crate::message::{AlgoMessage, Body};
use crate::oracle::TreeSnapshot;
use crate::runtime::{Command, Outbox, Runtime, Worker};

impl Worker {
    pub(crate) fn reset_paths(&mut self) {
        let source = self.partition.source();
        for (id, state) in self.partition.iter_mut() {
            state.reset_path_state();
            if id == source {
                state.distance = 0.0;
            }
        }
        self.affected.clear();
    }

    pub(crate) fn seed_source(&mut self, out: &mut Outbox) {
        let source = self.partition.source();
        if !self.partition.owns(source) {
            return;
        }
        let state = self.partition.vertex_mut(source);
        debug_assert!(state.distance != INFINITY);
        for edge in state.out_edges() {
            out.send(AlgoMessage::new(
                source,
                edge.destination,
                Body::DistanceUpdate(state.distance + edge.weight),
            ));
        }
    }
}

/// Cold-start shortest paths on the current topology. Leaves ingestion paused.
pub fn baseline_query(rt: &mut Runtime, event_index: u64) -> Result<TreeSnapshot> {
    rt.enforce_epoch()?;
    rt.post_to(owner_of_source(rt), Command::SeedSource)?;
    rt.enforce_epoch()?;
    let snapshot = rt.collect_state(event_index)?;
    clear_paths(rt)?;
    Ok(snapshot)
}

/// Wipes all path state so the next query starts cold.
pub(crate) fn clear_paths(rt: &mut Runtime) -> Result<()> {
    rt.broadcast(|| Command::ResetPaths)?;
    rt.enforce_epoch()
}

fn owner_of_source(rt: &Runtime) -> usize {
    crate::graph::partition_of(rt.source(), rt.workers())
}
