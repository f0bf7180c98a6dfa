//! Single-threaded deterministic executor.
//!
//! One worker owns the whole graph and the controller drives its loop
//! directly: after every posted topology item the worker drains its topology
//! lane and then handles at most `interleave` algorithmic messages. Pending
//! messages therefore overlap with later stream events exactly as in the
//! threaded executor, but in a reproducible order.

use std::collections::VecDeque;
use std::sync::atomic::Ordering;
use std::sync::Arc;
use std::time::{Duration, Instant};

use super::worker::{guarded, Command, Outbox, RuntimeStats, Worker};
use super::Counters;
use crate::error::{Error, QueueDepth, Result};
use crate::message::AlgoMessage;

pub(crate) struct InlineExecutor {
    worker: Worker,
    topology: VecDeque<Command>,
    algo: VecDeque<AlgoMessage>,
    out: Outbox,
    interleave: usize,
    counters: Arc<Counters>,
}

impl InlineExecutor {
    pub(crate) fn new(worker: Worker, interleave: usize, counters: Arc<Counters>) -> Self {
        InlineExecutor {
            worker,
            topology: VecDeque::new(),
            algo: VecDeque::new(),
            out: Outbox::new(1),
            interleave,
            counters,
        }
    }

    pub(crate) fn post(&mut self, command: Command) -> Result<()> {
        self.counters.sent.fetch_add(1, Ordering::SeqCst);
        self.topology.push_back(command);
        self.step(self.interleave)
    }

    pub(crate) fn send_message(&mut self, message: AlgoMessage) {
        self.counters.sent.fetch_add(1, Ordering::SeqCst);
        self.algo.push_back(message);
    }

    /// Drains the topology lane, then handles up to `budget` messages.
    fn step(&mut self, budget: usize) -> Result<()> {
        while let Some(command) = self.topology.pop_front() {
            let worker = &mut self.worker;
            let out = &mut self.out;
            let label = command.label();
            guarded(0, || label.to_string(), || worker.handle_command(command, out))?;
            self.settle(1);
        }
        for _ in 0..budget {
            let Some(message) = self.algo.pop_front() else {
                break;
            };
            let worker = &mut self.worker;
            let out = &mut self.out;
            guarded(
                0,
                || message.to_string(),
                || worker.handle_message(message, false, out),
            )?;
            self.settle(1);
        }
        Ok(())
    }

    fn settle(&mut self, handled: u64) {
        let produced = self.out.pending() as u64;
        self.counters.sent.fetch_add(produced, Ordering::SeqCst);
        self.out.drain_into(&mut self.algo);
        self.counters.processed.fetch_add(handled, Ordering::SeqCst);
    }

    pub(crate) fn drain(&mut self, watchdog: Duration) -> Result<()> {
        let started = Instant::now();
        loop {
            self.step(4096)?;
            if self.topology.is_empty() && self.algo.is_empty() {
                return Ok(());
            }
            if started.elapsed() > watchdog {
                return Err(Error::Watchdog {
                    timeout: watchdog,
                    in_flight: self.counters.in_flight(),
                    queues: vec![QueueDepth {
                        worker: 0,
                        topology: self.topology.len(),
                        algorithmic: self.algo.len(),
                    }],
                });
            }
        }
    }

    pub(crate) fn stats(&self) -> RuntimeStats {
        self.worker.stats()
    }

    pub(crate) fn with_worker<R>(&mut self, f: impl FnOnce(&Worker) -> R) -> R {
        self.counters.sent.fetch_add(1, Ordering::SeqCst);
        let result = f(&self.worker);
        self.counters.processed.fetch_add(1, Ordering::SeqCst);
        result
    }
}
