use std::collections::VecDeque;
use std::fmt;
use std::panic::{self, AssertUnwindSafe};

use crate::error::{Error, Result};
use crate::graph::{partition_of, GraphPartition, VertexId, Weight};
use crate::message::{AlgoMessage, Body, MessageKind};

/// Items carried on a worker's topology lane. Besides stream-derived edge
/// mutations this lane carries controller commands, so they too take priority
/// over algorithmic messages.
pub(crate) enum Command {
    /// Store an edge at its tail. With `notify`, fire the edge-addition handler.
    InsertOutEdge {
        src: VertexId,
        dst: VertexId,
        weight: Weight,
        notify: bool,
    },
    LinkIncoming {
        head: VertexId,
        tail: VertexId,
    },
    /// Drop an edge at its tail. With `invalidate`, run the tree-edge check.
    RemoveOutEdge {
        src: VertexId,
        dst: VertexId,
        invalidate: bool,
    },
    UnlinkIncoming {
        head: VertexId,
        tail: VertexId,
    },
    /// Marked vertices query their incoming neighbours.
    Recompute,
    /// Forget all shortest-path state (cold start).
    ResetPaths,
    /// The source offers its distance along every out-edge.
    SeedSource,
    Inspect(Box<dyn FnOnce(&Worker) + Send>),
    Shutdown,
}

impl fmt::Debug for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::InsertOutEdge {
                src, dst, weight, ..
            } => write!(f, "InsertOutEdge {src}->{dst} ({weight})"),
            Command::LinkIncoming { head, tail } => write!(f, "LinkIncoming {tail}->{head}"),
            Command::RemoveOutEdge { src, dst, .. } => write!(f, "RemoveOutEdge {src}->{dst}"),
            Command::UnlinkIncoming { head, tail } => write!(f, "UnlinkIncoming {tail}->{head}"),
            Command::Recompute => f.write_str("Recompute"),
            Command::ResetPaths => f.write_str("ResetPaths"),
            Command::SeedSource => f.write_str("SeedSource"),
            Command::Inspect(_) => f.write_str("Inspect"),
            Command::Shutdown => f.write_str("Shutdown"),
        }
    }
}

/// Copyable description of a command, kept for fault reports.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CommandLabel {
    name: &'static str,
    edge: Option<(VertexId, VertexId)>,
}

impl fmt::Display for CommandLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name)?;
        if let Some((tail, head)) = self.edge {
            write!(f, " {tail}->{head}")?;
        }
        Ok(())
    }
}

impl Command {
    pub(crate) fn label(&self) -> CommandLabel {
        let (name, edge) = match *self {
            Command::InsertOutEdge { src, dst, .. } => ("InsertOutEdge", Some((src, dst))),
            Command::LinkIncoming { head, tail } => ("LinkIncoming", Some((tail, head))),
            Command::RemoveOutEdge { src, dst, .. } => ("RemoveOutEdge", Some((src, dst))),
            Command::UnlinkIncoming { head, tail } => ("UnlinkIncoming", Some((tail, head))),
            Command::Recompute => ("Recompute", None),
            Command::ResetPaths => ("ResetPaths", None),
            Command::SeedSource => ("SeedSource", None),
            Command::Inspect(_) => ("Inspect", None),
            Command::Shutdown => ("Shutdown", None),
        };
        CommandLabel { name, edge }
    }

    /// The vertex whose owner must receive this command, if it is vertex-bound.
    pub(crate) fn target(&self) -> Option<VertexId> {
        match *self {
            Command::InsertOutEdge { src, .. } | Command::RemoveOutEdge { src, .. } => Some(src),
            Command::LinkIncoming { head, .. } | Command::UnlinkIncoming { head, .. } => Some(head),
            _ => None,
        }
    }
}

/// Counters a worker keeps about its own activity. Summed over workers they
/// describe the whole runtime.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct RuntimeStats {
    /// Algorithmic messages handled, indexed by [`MessageKind`].
    pub processed: [u64; 5],
    /// Distance updates that strictly improved a distance.
    pub accepted_updates: u64,
    pub topology_commands: u64,
    pub duplicate_edges: u64,
    pub edges: u64,
    pub vertices: u64,
    /// Vertices currently flagged as invalidated and awaiting recomputation.
    pub marked: u64,
}

impl RuntimeStats {
    pub fn processed_of(&self, kind: MessageKind) -> u64 {
        self.processed[kind.index()]
    }

    pub fn total_processed(&self) -> u64 {
        self.processed.iter().sum()
    }

    pub(crate) fn merge(&mut self, other: &RuntimeStats) {
        for (a, b) in self.processed.iter_mut().zip(other.processed) {
            *a += b;
        }
        self.accepted_updates += other.accepted_updates;
        self.topology_commands += other.topology_commands;
        self.duplicate_edges += other.duplicate_edges;
        self.edges += other.edges;
        self.vertices += other.vertices;
        self.marked += other.marked;
    }

    /// Per-kind processed counts accumulated since `earlier`.
    pub fn processed_since(&self, earlier: &RuntimeStats) -> [u64; 5] {
        let mut delta = [0; 5];
        for (i, d) in delta.iter_mut().enumerate() {
            *d = self.processed[i] - earlier.processed[i];
        }
        delta
    }
}

/// One item handled by a worker, in handling order.
#[derive(Debug, Clone, PartialEq)]
pub enum TraceEntry {
    Topology(String),
    Message {
        message: AlgoMessage,
        /// Whether the topology lane held anything when this message was taken.
        topology_pending: bool,
    },
}

/// Outgoing messages buffered per destination worker until the next flush.
#[derive(Debug)]
pub struct Outbox {
    buffers: Vec<Vec<AlgoMessage>>,
    pending: usize,
}

impl Outbox {
    pub fn new(workers: usize) -> Self {
        Outbox {
            buffers: vec![Vec::new(); workers],
            pending: 0,
        }
    }

    pub fn send(&mut self, message: AlgoMessage) {
        let dest = partition_of(message.receiver, self.buffers.len());
        self.buffers[dest].push(message);
        self.pending += 1;
    }

    pub fn pending(&self) -> usize {
        self.pending
    }

    /// Takes the buffered messages for each destination, in send order.
    pub(crate) fn drain(&mut self) -> impl Iterator<Item = (usize, Vec<AlgoMessage>)> + '_ {
        self.pending = 0;
        self.buffers
            .iter_mut()
            .enumerate()
            .filter(|(_, buf)| !buf.is_empty())
            .map(|(dest, buf)| (dest, std::mem::take(buf)))
    }

    /// Moves every buffered message into `lane`, keeping buffer capacity.
    pub(crate) fn drain_into(&mut self, lane: &mut VecDeque<AlgoMessage>) {
        self.pending = 0;
        for buf in &mut self.buffers {
            lane.extend(buf.drain(..));
        }
    }

    /// All buffered messages in send order per destination. Test helper.
    pub fn messages(&self) -> impl Iterator<Item = &AlgoMessage> + '_ {
        self.buffers.iter().flatten()
    }
}

/// A partition together with its worker-local bookkeeping.
pub struct Worker {
    pub(crate) partition: GraphPartition,
    /// Dense indices of vertices marked during the current invalidation.
    pub(crate) affected: Vec<usize>,
    pub(crate) stats: RuntimeStats,
    trace: Option<Vec<TraceEntry>>,
}

impl Worker {
    pub fn new(partition: GraphPartition, trace: bool) -> Self {
        let mut worker = Worker {
            partition,
            affected: Vec::new(),
            stats: RuntimeStats::default(),
            trace: trace.then(Vec::new),
        };
        worker.refresh_sizes();
        worker
    }

    pub fn partition(&self) -> &GraphPartition {
        &self.partition
    }

    pub fn stats(&self) -> RuntimeStats {
        self.stats
    }

    pub fn trace(&self) -> &[TraceEntry] {
        self.trace.as_deref().unwrap_or(&[])
    }

    fn refresh_sizes(&mut self) {
        self.stats.edges = self.partition.edge_count() as u64;
        self.stats.vertices = self.partition.len() as u64;
        self.stats.marked = self.affected.len() as u64;
    }

    pub(crate) fn handle_command(&mut self, command: Command, out: &mut Outbox) -> Result<()> {
        if let Some(trace) = &mut self.trace {
            trace.push(TraceEntry::Topology(format!("{command:?}")));
        }
        self.stats.topology_commands += 1;
        match command {
            Command::InsertOutEdge {
                src,
                dst,
                weight,
                notify,
            } => {
                if self.partition.insert_out_edge(src, dst, weight)? {
                    if notify {
                        self.on_edge_addition(src, dst, weight, out);
                    }
                } else {
                    self.stats.duplicate_edges += 1;
                }
            }
            Command::LinkIncoming { head, tail } => self.partition.link_incoming(head, tail),
            Command::RemoveOutEdge {
                src,
                dst,
                invalidate,
            } => {
                self.partition.remove_out_edge(src, dst)?;
                if invalidate {
                    self.on_edge_deletion(src, dst, out);
                }
            }
            Command::UnlinkIncoming { head, tail } => self.partition.unlink_incoming(head, tail),
            Command::Recompute => self.recompute_marked(out),
            Command::ResetPaths => self.reset_paths(),
            Command::SeedSource => self.seed_source(out),
            Command::Inspect(f) => f(self),
            Command::Shutdown => {}
        }
        self.refresh_sizes();
        Ok(())
    }

    pub(crate) fn handle_message(
        &mut self,
        message: AlgoMessage,
        topology_pending: bool,
        out: &mut Outbox,
    ) -> Result<()> {
        if let Some(trace) = &mut self.trace {
            trace.push(TraceEntry::Message {
                message,
                topology_pending,
            });
        }
        self.stats.processed[message.kind().index()] += 1;
        let AlgoMessage {
            sender: from,
            receiver: v,
            body,
        } = message;
        match body {
            Body::DistanceQuery => self.on_distance_query(v, from, out)?,
            Body::DistanceUpdate(dist) => self.on_distance_update(v, from, dist, out),
            Body::SetToInfinity => self.on_set_to_infinity(v, out),
            Body::AddToSuccessor => self.on_add_to_successor(v, from),
            Body::RemoveFromSuccessor => self.on_remove_from_successor(v, from),
        }
        self.stats.vertices = self.partition.len() as u64;
        self.stats.marked = self.affected.len() as u64;
        Ok(())
    }
}

/// Runs `f`, turning a panic into [`Error::WorkerPanic`] tagged with `context`.
pub(crate) fn guarded<T>(
    worker: usize,
    context: impl FnOnce() -> String,
    f: impl FnOnce() -> Result<T>,
) -> Result<T> {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(result) => result,
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "non-string panic payload".to_string());
            Err(Error::WorkerPanic {
                worker,
                context: context(),
                message,
            })
        }
    }
}
