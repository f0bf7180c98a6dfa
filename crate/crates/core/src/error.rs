use std::path::PathBuf;
use std::time::Duration;

use thiserror::Error;

use crate::graph::VertexId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Pending items in one worker's mailbox, reported when an epoch times out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueueDepth {
    pub worker: usize,
    pub topology: usize,
    pub algorithmic: usize,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("edge {src}->{dst} has non-positive or non-finite weight {weight}")]
    InvalidWeight {
        src: VertexId,
        dst: VertexId,
        weight: f64,
    },

    #[error("stream deletes edge {src}->{dst}, which does not exist")]
    StreamConsistency { src: VertexId, dst: VertexId },

    #[error("internal consistency: edge {src}->{dst} expected but missing")]
    MissingEdge { src: VertexId, dst: VertexId },

    #[error("epoch did not reach quiescence within {timeout:?} (in flight: {in_flight}; queues: {queues:?})")]
    Watchdog {
        timeout: Duration,
        in_flight: u64,
        queues: Vec<QueueDepth>,
    },

    #[error("worker {worker} panicked while handling {context}: {message}")]
    WorkerPanic {
        worker: usize,
        context: String,
        message: String,
    },

    #[error("ingestion is paused; resume the epoch before ingesting")]
    IngestionPaused,

    #[error("requested {requested} sources but the graph has only {available} vertices")]
    NotEnoughVertices { requested: usize, available: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by a malformed input stream or config, as opposed
    /// to runtime faults.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Format { .. }
                | Error::InvalidWeight { .. }
                | Error::StreamConsistency { .. }
                | Error::NotEnoughVertices { .. }
                | Error::Config(_)
                | Error::Io(_)
        )
    }
}
