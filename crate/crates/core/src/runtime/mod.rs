//! Asynchronous, shared-nothing, vertex-centric execution.
//!
//! The [`Runtime`] is driven by a single ingestion controller. It routes
//! topology commands to the worker owning the affected vertex, enforces epochs
//! (ingestion pauses until every in-flight item has been handled), and collects
//! the shortest-path tree from all partitions on demand.
//!
//! Quiescence is detected with two global counters. Every enqueue of a
//! topology command or algorithmic message bumps `sent` first; a worker bumps
//! `processed` only after the messages its handlers produced have been counted
//! and enqueued. Reading `processed` and then `sent` and finding them equal
//! therefore proves nothing is in flight.

mod inline;
mod threaded;
mod worker;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use crossbeam::utils::CachePadded;

pub use worker::{Outbox, RuntimeStats, TraceEntry, Worker};
pub(crate) use worker::Command;

use crate::error::{Error, Result};
use crate::graph::{partition_of, GraphPartition, VertexId};
use crate::message::AlgoMessage;
use crate::oracle::{SnapshotEntry, TreeSnapshot};
use inline::InlineExecutor;
use threaded::ThreadedExecutor;

pub const DEFAULT_WATCHDOG: Duration = Duration::from_secs(60);

/// Default number of algorithmic messages the deterministic executor handles
/// after each ingested topology item.
pub const DEFAULT_INTERLEAVE: usize = 32;

#[derive(Debug, Default)]
pub(crate) struct Counters {
    sent: CachePadded<AtomicU64>,
    processed: CachePadded<AtomicU64>,
}

impl Counters {
    fn in_flight(&self) -> u64 {
        let processed = self.processed.load(Ordering::SeqCst);
        let sent = self.sent.load(Ordering::SeqCst);
        sent.saturating_sub(processed)
    }

    fn quiescent(&self) -> bool {
        let processed = self.processed.load(Ordering::SeqCst);
        let sent = self.sent.load(Ordering::SeqCst);
        sent == processed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecutionMode {
    /// One partition driven from the controller thread; reproducible.
    Deterministic,
    /// One thread per partition.
    Threaded,
}

#[derive(Debug, Clone)]
pub struct RuntimeConfig {
    pub workers: usize,
    pub mode: ExecutionMode,
    pub watchdog: Duration,
    /// Messages handled per ingested item in deterministic mode.
    pub interleave: usize,
    /// Record every handled item per worker.
    pub trace: bool,
}

impl RuntimeConfig {
    /// Deterministic for one worker, threaded otherwise.
    pub fn with_workers(workers: usize) -> Self {
        RuntimeConfig {
            workers,
            mode: if workers == 1 {
                ExecutionMode::Deterministic
            } else {
                ExecutionMode::Threaded
            },
            watchdog: DEFAULT_WATCHDOG,
            interleave: DEFAULT_INTERLEAVE,
            trace: false,
        }
    }

    pub fn threaded(workers: usize) -> Self {
        RuntimeConfig {
            mode: ExecutionMode::Threaded,
            ..Self::with_workers(workers)
        }
    }

    pub fn traced(mut self) -> Self {
        self.trace = true;
        self
    }
}

impl Default for RuntimeConfig {
    fn default() -> Self {
        Self::with_workers(1)
    }
}

/// Barrier state: the shared counters plus whether ingestion is paused.
#[derive(Debug)]
pub struct EpochController {
    counters: Arc<Counters>,
    paused: bool,
    epochs: u64,
    watchdog: Duration,
}

impl EpochController {
    pub fn sent_count(&self) -> u64 {
        self.counters.sent.load(Ordering::SeqCst)
    }

    pub fn processed_count(&self) -> u64 {
        self.counters.processed.load(Ordering::SeqCst)
    }

    pub fn ingestion_paused(&self) -> bool {
        self.paused
    }

    pub fn epochs(&self) -> u64 {
        self.epochs
    }
}

enum Executor {
    Inline(Box<InlineExecutor>),
    Threaded(ThreadedExecutor),
}

pub struct Runtime {
    source: VertexId,
    workers: usize,
    epoch: EpochController,
    executor: Executor,
}

impl Runtime {
    pub fn new(source: VertexId, config: &RuntimeConfig) -> Result<Self> {
        if config.workers == 0 {
            return Err(Error::Config("worker count must be at least 1".into()));
        }
        if config.mode == ExecutionMode::Deterministic && config.workers != 1 {
            return Err(Error::Config(
                "deterministic execution uses exactly one worker".into(),
            ));
        }
        let counters = Arc::new(Counters::default());
        let workers: Vec<Worker> = (0..config.workers)
            .map(|p| Worker::new(GraphPartition::new(p, config.workers, source), config.trace))
            .collect();
        let executor = match config.mode {
            ExecutionMode::Deterministic => {
                let worker = workers.into_iter().next().expect("one worker");
                Executor::Inline(Box::new(InlineExecutor::new(
                    worker,
                    config.interleave,
                    Arc::clone(&counters),
                )))
            }
            ExecutionMode::Threaded => {
                Executor::Threaded(ThreadedExecutor::spawn(workers, Arc::clone(&counters))?)
            }
        };
        Ok(Runtime {
            source,
            workers: config.workers,
            epoch: EpochController {
                counters,
                paused: false,
                epochs: 0,
                watchdog: config.watchdog,
            },
            executor,
        })
    }

    pub fn source(&self) -> VertexId {
        self.source
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn epoch(&self) -> &EpochController {
        &self.epoch
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self.executor, Executor::Inline(_))
    }

    /// Enqueues a topology command on the lane of the worker owning its target.
    pub(crate) fn post(&mut self, command: Command) -> Result<()> {
        let target = command
            .target()
            .expect("vertex-bound command required; use broadcast");
        let worker = partition_of(target, self.workers);
        self.post_to(worker, command)
    }

    pub(crate) fn post_to(&mut self, worker: usize, command: Command) -> Result<()> {
        match &mut self.executor {
            Executor::Inline(ex) => ex.post(command),
            Executor::Threaded(ex) => ex.post(worker, command),
        }
    }

    pub(crate) fn broadcast(&mut self, make: impl Fn() -> Command) -> Result<()> {
        for worker in 0..self.workers {
            self.post_to(worker, make())?;
        }
        Ok(())
    }

    /// Enqueues an algorithmic message on the receiver's mailbox.
    pub fn send_message(&mut self, message: AlgoMessage) {
        let worker = partition_of(message.receiver, self.workers);
        match &mut self.executor {
            Executor::Inline(ex) => ex.send_message(message),
            Executor::Threaded(ex) => ex.send_message(worker, message),
        }
    }

    /// Pauses ingestion and blocks until no work is in flight anywhere.
    pub fn enforce_epoch(&mut self) -> Result<()> {
        self.epoch.paused = true;
        let watchdog = self.epoch.watchdog;
        match &mut self.executor {
            Executor::Inline(ex) => ex.drain(watchdog)?,
            Executor::Threaded(ex) => {
                let started = Instant::now();
                let mut idle_rounds = 0u32;
                loop {
                    ex.check_fault()?;
                    if self.epoch.counters.quiescent() {
                        break;
                    }
                    if started.elapsed() > watchdog {
                        return Err(Error::Watchdog {
                            timeout: watchdog,
                            in_flight: self.epoch.counters.in_flight(),
                            queues: ex.queue_depths(),
                        });
                    }
                    // Workers may share our core: yield first, then back off.
                    idle_rounds += 1;
                    if idle_rounds < 256 {
                        std::thread::yield_now();
                    } else {
                        std::thread::sleep(Duration::from_micros(50));
                    }
                }
                ex.check_fault()?;
            }
        }
        self.epoch.epochs += 1;
        Ok(())
    }

    pub fn resume(&mut self) {
        self.epoch.paused = false;
    }

    pub fn is_paused(&self) -> bool {
        self.epoch.paused
    }

    pub(crate) fn ensure_running(&self) -> Result<()> {
        if self.epoch.paused {
            Err(Error::IngestionPaused)
        } else {
            Ok(())
        }
    }

    /// Summed worker statistics. Exact only at quiescence.
    pub fn stats(&self) -> RuntimeStats {
        match &self.executor {
            Executor::Inline(ex) => ex.stats(),
            Executor::Threaded(ex) => ex.stats(),
        }
    }

    pub(crate) fn inspect_workers<R, F>(&mut self, f: F) -> Result<Vec<R>>
    where
        F: Fn(&Worker) -> R + Send + Sync + 'static,
        R: Send + 'static,
    {
        if !self.epoch.paused {
            self.enforce_epoch()?;
        }
        match &mut self.executor {
            Executor::Inline(ex) => Ok(vec![ex.with_worker(f)]),
            Executor::Threaded(ex) => ex.inspect(f),
        }
    }

    /// Runs `f` against every partition at quiescence, in worker order.
    pub fn inspect<R, F>(&mut self, f: F) -> Result<Vec<R>>
    where
        F: Fn(&GraphPartition) -> R + Send + Sync + 'static,
        R: Send + 'static,
    {
        self.inspect_workers(move |w| f(w.partition()))
    }

    /// Handled items per worker, if tracing was enabled.
    pub fn trace(&mut self) -> Result<Vec<Vec<TraceEntry>>> {
        self.inspect_workers(|w| w.trace().to_vec())
    }

    /// Gathers (vertex, predecessor, distance) for every vertex. Enforces an
    /// epoch first if ingestion is still running; does not resume.
    pub fn collect_state(&mut self, event_index: u64) -> Result<TreeSnapshot> {
        let parts = self.inspect(|p| {
            p.iter()
                .map(|(vertex, state)| SnapshotEntry {
                    vertex,
                    predecessor: state.predecessor,
                    distance: state.distance,
                })
                .collect::<Vec<_>>()
        })?;
        let mut entries: Vec<SnapshotEntry> = parts.into_iter().flatten().collect();
        entries.sort_unstable_by_key(|e| e.vertex);
        Ok(TreeSnapshot::new(self.source, event_index, entries))
    }
}
