//! Stream ingestion on top of the runtime, for either the dynamic algorithm or
//! the recompute-from-scratch baseline.

use std::fmt;
use std::str::FromStr;

use crate::baseline::baseline_query;
use crate::error::{Error, Result};
use crate::graph::{check_weight, VertexId, Weight};
use crate::message::TopologyEvent;
use crate::oracle::TreeSnapshot;
use crate::runtime::{Command, Runtime, RuntimeConfig, RuntimeStats};
use crate::sssp::{process_edge_deletion, DeletionPhase, DeletionReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineKind {
    SsspDel,
    Baseline,
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EngineKind::SsspDel => "sssp-del",
            EngineKind::Baseline => "baseline",
        })
    }
}

impl FromStr for EngineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sssp-del" => Ok(EngineKind::SsspDel),
            "baseline" => Ok(EngineKind::Baseline),
            other => Err(Error::Config(format!(
                "unknown engine {other:?} (expected sssp-del or baseline)"
            ))),
        }
    }
}

/// Result of ingesting one stream event.
#[derive(Debug, Clone)]
pub enum Outcome {
    Added,
    Deleted(Option<DeletionReport>),
    Snapshot(TreeSnapshot),
}

/// Running totals over all deletions seen so far.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DeletionSummary {
    pub deletions: u64,
    pub tree_edges: u64,
    pub max_set_to_infinity: u64,
    /// Deletions whose `SetToInfinity` count exceeded the edge count.
    pub bound_violations: u64,
    /// Deletions during whose invalidation any other message was handled.
    pub isolation_violations: u64,
}

impl DeletionSummary {
    fn record(&mut self, report: &DeletionReport) {
        self.deletions += 1;
        self.tree_edges += report.tree_edge as u64;
        self.max_set_to_infinity = self.max_set_to_infinity.max(report.set_to_infinity());
        if report.set_to_infinity() > report.edges_before {
            self.bound_violations += 1;
        }
        if report.invalidation_leaks() > 0 {
            self.isolation_violations += 1;
        }
    }
}

pub struct Engine {
    kind: EngineKind,
    runtime: Runtime,
    phase: DeletionPhase,
    events: u64,
    deletions: DeletionSummary,
}

impl Engine {
    pub fn new(kind: EngineKind, source: VertexId, config: &RuntimeConfig) -> Result<Self> {
        Ok(Engine {
            kind,
            runtime: Runtime::new(source, config)?,
            phase: DeletionPhase::Idle,
            events: 0,
            deletions: DeletionSummary::default(),
        })
    }

    pub fn kind(&self) -> EngineKind {
        self.kind
    }

    pub fn source(&self) -> VertexId {
        self.runtime.source()
    }

    pub fn runtime(&mut self) -> &mut Runtime {
        &mut self.runtime
    }

    /// Adds and deletes ingested so far.
    pub fn events(&self) -> u64 {
        self.events
    }

    pub fn phase(&self) -> DeletionPhase {
        self.phase
    }

    pub fn deletion_summary(&self) -> DeletionSummary {
        self.deletions
    }

    pub fn stats(&self) -> RuntimeStats {
        self.runtime.stats()
    }

    pub fn ingest_event(&mut self, event: &TopologyEvent) -> Result<Outcome> {
        match *event {
            TopologyEvent::AddEdge {
                src, dst, weight, ..
            } => {
                self.add_edge(src, dst, weight)?;
                Ok(Outcome::Added)
            }
            TopologyEvent::DeleteEdge { src, dst, .. } => {
                Ok(Outcome::Deleted(self.delete_edge(src, dst)?))
            }
            TopologyEvent::QueryMarker { .. } => Ok(Outcome::Snapshot(self.query()?)),
        }
    }

    pub fn add_edge(&mut self, src: VertexId, dst: VertexId, weight: Weight) -> Result<()> {
        self.runtime.ensure_running()?;
        check_weight(src, dst, weight)?;
        self.runtime.post(Command::LinkIncoming {
            head: dst,
            tail: src,
        })?;
        self.runtime.post(Command::InsertOutEdge {
            src,
            dst,
            weight,
            notify: self.kind == EngineKind::SsspDel,
        })?;
        self.events += 1;
        Ok(())
    }

    /// Deletes an edge. For the dynamic engine this runs the epoch-bracketed
    /// two-phase protocol and returns its cost; the baseline just updates
    /// topology.
    pub fn delete_edge(&mut self, src: VertexId, dst: VertexId) -> Result<Option<DeletionReport>> {
        self.runtime.ensure_running()?;
        self.events += 1;
        match self.kind {
            EngineKind::SsspDel => {
                let report = process_edge_deletion(&mut self.runtime, &mut self.phase, src, dst)?;
                self.deletions.record(&report);
                self.runtime.resume();
                Ok(Some(report))
            }
            EngineKind::Baseline => {
                self.runtime.post(Command::UnlinkIncoming {
                    head: dst,
                    tail: src,
                })?;
                self.runtime.post(Command::RemoveOutEdge {
                    src,
                    dst,
                    invalidate: false,
                })?;
                Ok(None)
            }
        }
    }

    /// Enforces an epoch, collects the tree and resumes ingestion.
    pub fn query(&mut self) -> Result<TreeSnapshot> {
        let snapshot = match self.kind {
            EngineKind::SsspDel => {
                self.runtime.enforce_epoch()?;
                self.runtime.collect_state(self.events)?
            }
            EngineKind::Baseline => baseline_query(&mut self.runtime, self.events)?,
        };
        self.runtime.resume();
        Ok(snapshot)
    }

    /// Drains all in-flight work without collecting anything.
    pub fn settle(&mut self) -> Result<()> {
        self.runtime.enforce_epoch()?;
        self.runtime.resume();
        Ok(())
    }
}
