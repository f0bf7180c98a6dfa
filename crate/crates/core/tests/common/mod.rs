#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sssp_del::oracle::{validate_tree, ReferenceGraph};
use sssp_del::{Engine, EngineKind, RuntimeConfig, TopologyEvent, TreeSnapshot, VertexId};

pub fn v(id: u32) -> VertexId {
    VertexId(id)
}

/// Worker configurations exercised by most tests: the deterministic executor
/// plus threaded runs with several partitions.
pub fn configs() -> Vec<RuntimeConfig> {
    vec![
        RuntimeConfig::with_workers(1),
        RuntimeConfig::threaded(2),
        RuntimeConfig::threaded(4),
    ]
}

#[derive(Debug, Clone)]
pub struct VertexView {
    pub predecessor: Option<VertexId>,
    pub successors: BTreeSet<VertexId>,
    pub distance: f64,
    pub marked: bool,
}

/// Full scan of every partition at quiescence.
pub fn scan(engine: &mut Engine) -> BTreeMap<VertexId, VertexView> {
    let parts = engine
        .runtime()
        .inspect(|p| {
            p.iter()
                .map(|(id, s)| {
                    (
                        id,
                        VertexView {
                            predecessor: s.predecessor,
                            successors: s.successors.iter().copied().collect(),
                            distance: s.distance,
                            marked: s.marked_infinity,
                        },
                    )
                })
                .collect::<Vec<_>>()
        })
        .unwrap();
    engine.runtime().resume();
    parts.into_iter().flatten().collect()
}

/// Successor sets mirror predecessors exactly and no vertex is left marked.
pub fn assert_links_consistent(engine: &mut Engine) {
    let view = scan(engine);
    let mut expected: BTreeMap<VertexId, BTreeSet<VertexId>> = BTreeMap::new();
    for (&id, s) in &view {
        assert!(!s.marked, "vertex {id} still marked");
        if let Some(p) = s.predecessor {
            expected.entry(p).or_default().insert(id);
        }
    }
    for (&id, s) in &view {
        let want = expected.remove(&id).unwrap_or_default();
        assert_eq!(s.successors, want, "successors of {id}");
    }
    assert!(expected.is_empty(), "predecessors without state: {expected:?}");
}

/// Ingests events, checking every snapshot against the oracle.
pub fn replay_validated(
    kind: EngineKind,
    config: &RuntimeConfig,
    source: VertexId,
    events: &[TopologyEvent],
) -> Vec<TreeSnapshot> {
    let mut engine = Engine::new(kind, source, config).unwrap();
    let mut reference = ReferenceGraph::new(source);
    let mut snaps = Vec::new();
    for e in events {
        if e.is_marker() {
            let snap = engine.query().unwrap();
            let report = validate_tree(&snap, &reference, source);
            assert!(report.passed(), "{:?} after {} events", report.violation, snap.event_index);
            snaps.push(snap);
        } else {
            reference.apply(e).unwrap();
            engine.ingest_event(e).unwrap();
        }
    }
    snaps
}

/// Random valid stream over `n` vertices: additions of absent edges and
/// deletions of live ones, with a marker every `query_every` events.
pub fn random_stream(
    seed: u64,
    n: u32,
    events: usize,
    delete_share: f64,
    query_every: usize,
    max_weight: Option<f64>,
) -> Vec<TopologyEvent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut live: Vec<(u32, u32)> = Vec::new();
    let mut present = BTreeSet::new();
    let mut out = Vec::with_capacity(events + events / query_every.max(1) + 1);
    for i in 0..events {
        if !live.is_empty() && rng.gen_bool(delete_share) {
            let idx = rng.gen_range(0..live.len());
            let (a, b) = live.swap_remove(idx);
            present.remove(&(a, b));
            out.push(TopologyEvent::delete(a, b));
        } else {
            let (a, b) = loop {
                let a = rng.gen_range(0..n);
                let b = rng.gen_range(0..n);
                if a != b && !present.contains(&(a, b)) {
                    break (a, b);
                }
            };
            let w = match max_weight {
                Some(m) => rng.gen_range(0.01..m),
                None => 1.0,
            };
            live.push((a, b));
            present.insert((a, b));
            out.push(TopologyEvent::add(a, b, w));
        }
        if (i + 1) % query_every == 0 {
            out.push(TopologyEvent::query());
        }
    }
    out.push(TopologyEvent::query());
    out
}

pub fn shuffled<T: Clone>(items: &[T], seed: u64) -> Vec<T> {
    let mut v = items.to_vec();
    v.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    v
}
