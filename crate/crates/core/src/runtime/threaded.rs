//! One OS thread per partition, connected by unbounded FIFO channels.
//!
//! Each worker has two receiving lanes: topology commands and batches of
//! algorithmic messages. Any thread may enqueue on either lane; only the owner
//! dequeues. Because every producer pushes its outgoing batches in order, the
//! per (sender, receiver) FIFO guarantee holds.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};

use crossbeam::channel::{self, Receiver, Sender};

use super::worker::{guarded, Command, Outbox, RuntimeStats, Worker};
use super::Counters;
use crate::error::{Error, QueueDepth, Result};
use crate::message::AlgoMessage;

/// Algorithmic messages handled between two flushes.
const CHUNK: usize = 256;

pub(crate) struct Shared {
    counters: Arc<Counters>,
    faulted: AtomicBool,
    fault: Mutex<Option<Error>>,
    stats: Vec<Mutex<RuntimeStats>>,
}

impl Shared {
    fn record_fault(&self, error: Error) {
        let mut slot = self.fault.lock().unwrap_or_else(|e| e.into_inner());
        if slot.is_none() {
            log::error!("worker fault: {error}");
            *slot = Some(error);
        }
        self.faulted.store(true, Ordering::SeqCst);
    }
}

pub(crate) struct ThreadedExecutor {
    topology: Vec<Sender<Command>>,
    algo: Vec<Sender<Vec<AlgoMessage>>>,
    handles: Vec<JoinHandle<()>>,
    shared: Arc<Shared>,
}

impl ThreadedExecutor {
    pub(crate) fn spawn(workers: Vec<Worker>, counters: Arc<Counters>) -> Result<Self> {
        let n = workers.len();
        let (topology_tx, topology_rx): (Vec<_>, Vec<_>) =
            (0..n).map(|_| channel::unbounded::<Command>()).unzip();
        let (algo_tx, algo_rx): (Vec<_>, Vec<_>) =
            (0..n).map(|_| channel::unbounded::<Vec<AlgoMessage>>()).unzip();
        let shared = Arc::new(Shared {
            counters,
            faulted: AtomicBool::new(false),
            fault: Mutex::new(None),
            stats: workers.iter().map(|w| Mutex::new(w.stats())).collect(),
        });

        let mut handles = Vec::with_capacity(n);
        for (id, ((worker, topo_rx), algo_rx)) in workers
            .into_iter()
            .zip(topology_rx)
            .zip(algo_rx)
            .enumerate()
        {
            let lanes = Lanes {
                id,
                topology: topo_rx,
                algo: algo_rx,
                peers: algo_tx.clone(),
                shared: Arc::clone(&shared),
            };
            let handle = thread::Builder::new()
                .name(format!("sssp-worker-{id}"))
                .spawn(move || lanes.run(worker))?;
            handles.push(handle);
        }

        Ok(ThreadedExecutor {
            topology: topology_tx,
            algo: algo_tx,
            handles,
            shared,
        })
    }

    pub(crate) fn workers(&self) -> usize {
        self.topology.len()
    }

    pub(crate) fn post(&self, worker: usize, command: Command) -> Result<()> {
        self.check_fault()?;
        self.shared.counters.sent.fetch_add(1, Ordering::SeqCst);
        self.topology[worker]
            .send(command)
            .expect("worker thread exited while runtime alive");
        Ok(())
    }

    pub(crate) fn send_message(&self, worker: usize, message: AlgoMessage) {
        self.shared.counters.sent.fetch_add(1, Ordering::SeqCst);
        self.algo[worker]
            .send(vec![message])
            .expect("worker thread exited while runtime alive");
    }

    pub(crate) fn check_fault(&self) -> Result<()> {
        if !self.shared.faulted.load(Ordering::SeqCst) {
            return Ok(());
        }
        let mut slot = self.shared.fault.lock().unwrap_or_else(|e| e.into_inner());
        match slot.take() {
            Some(error) => Err(error),
            None => Err(Error::Config("runtime aborted after an earlier fault".into())),
        }
    }

    pub(crate) fn queue_depths(&self) -> Vec<QueueDepth> {
        self.topology
            .iter()
            .zip(&self.algo)
            .enumerate()
            .map(|(worker, (t, a))| QueueDepth {
                worker,
                topology: t.len(),
                algorithmic: a.len(),
            })
            .collect()
    }

    /// Sum of the statistics last published by each worker.
    pub(crate) fn stats(&self) -> RuntimeStats {
        let mut total = RuntimeStats::default();
        for slot in &self.shared.stats {
            total.merge(&slot.lock().unwrap_or_else(|e| e.into_inner()));
        }
        total
    }

    /// Runs `f` on every worker's thread and gathers the results in worker order.
    pub(crate) fn inspect<R, F>(&self, f: F) -> Result<Vec<R>>
    where
        F: Fn(&Worker) -> R + Send + Sync + 'static,
        R: Send + 'static,
    {
        let f = Arc::new(f);
        let mut replies = Vec::with_capacity(self.workers());
        for worker in 0..self.workers() {
            let (tx, rx) = channel::bounded(1);
            let f = Arc::clone(&f);
            self.post(
                worker,
                Command::Inspect(Box::new(move |w| {
                    let _ = tx.send(f(w));
                })),
            )?;
            replies.push(rx);
        }
        let mut results = Vec::with_capacity(replies.len());
        for rx in replies {
            match rx.recv() {
                Ok(r) => results.push(r),
                Err(_) => {
                    self.check_fault()?;
                    return Err(Error::Config("worker dropped an inspection reply".into()));
                }
            }
        }
        Ok(results)
    }

    pub(crate) fn shutdown(&mut self) {
        for tx in &self.topology {
            let _ = tx.send(Command::Shutdown);
        }
        for handle in self.handles.drain(..) {
            let _ = handle.join();
        }
    }
}

impl Drop for ThreadedExecutor {
    fn drop(&mut self) {
        self.shutdown();
    }
}

struct Lanes {
    id: usize,
    topology: Receiver<Command>,
    algo: Receiver<Vec<AlgoMessage>>,
    peers: Vec<Sender<Vec<AlgoMessage>>>,
    shared: Arc<Shared>,
}

impl Lanes {
    fn run(self, mut worker: Worker) {
        let mut out = Outbox::new(self.peers.len());
        let mut inbox: VecDeque<AlgoMessage> = VecDeque::new();
        loop {
            let mut handled = 0u64;

            while let Ok(command) = self.topology.try_recv() {
                if matches!(command, Command::Shutdown) {
                    return;
                }
                self.on_command(&mut worker, command, &mut out);
                handled += 1;
            }

            let mut budget = CHUNK;
            while budget > 0 {
                let topology_pending = !self.topology.is_empty();
                if topology_pending {
                    break;
                }
                let message = match inbox.pop_front() {
                    Some(m) => m,
                    None => match self.algo.try_recv() {
                        Ok(batch) => {
                            inbox = VecDeque::from(batch);
                            continue;
                        }
                        Err(_) => break,
                    },
                };
                let result = guarded(
                    self.id,
                    || message.to_string(),
                    || worker.handle_message(message, topology_pending, &mut out),
                );
                if let Err(e) = result {
                    self.shared.record_fault(e);
                }
                handled += 1;
                budget -= 1;
            }

            if handled > 0 {
                self.publish(&worker, &mut out, handled);
                continue;
            }

            // Both lanes empty: park until something arrives.
            crossbeam::select! {
                recv(self.topology) -> command => match command {
                    Ok(Command::Shutdown) | Err(_) => return,
                    Ok(command) => {
                        self.on_command(&mut worker, command, &mut out);
                        self.publish(&worker, &mut out, 1);
                    }
                },
                recv(self.algo) -> batch => match batch {
                    Ok(batch) => inbox.extend(batch),
                    Err(_) => return,
                },
            }
        }
    }

    fn on_command(&self, worker: &mut Worker, command: Command, out: &mut Outbox) {
        let label = command.label();
        if let Err(e) = guarded(self.id, || label.to_string(), || {
            worker.handle_command(command, out)
        }) {
            self.shared.record_fault(e);
        }
    }

    /// Makes outgoing messages visible, then accounts for the handled items.
    /// The sent counter always moves before the processed counter so the
    /// controller never observes a false quiescence.
    fn publish(&self, worker: &Worker, out: &mut Outbox, handled: u64) {
        let produced = out.pending() as u64;
        if produced > 0 {
            self.shared.counters.sent.fetch_add(produced, Ordering::SeqCst);
            for (dest, batch) in out.drain() {
                // A closed peer only happens during shutdown.
                let _ = self.peers[dest].send(batch);
            }
        }
        *self.shared.stats[self.id]
            .lock()
            .unwrap_or_else(|e| e.into_inner()) = worker.stats();
        self.shared
            .counters
            .processed
            .fetch_add(handled, Ordering::SeqCst);
    }
}
