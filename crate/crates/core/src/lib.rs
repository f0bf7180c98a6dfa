//! Dynamic single-source shortest paths on an asynchronous, vertex-centric
//! runtime.
//!
//! Edge additions propagate improved distances with monotone relaxation.
//! Deletions of tree edges run in two epoch-separated phases: the affected
//! subtree is first invalidated to infinity, then each invalidated vertex asks
//! its in-neighbours for their distances and relaxation rebuilds the tree.
//!
//! The crate also contains a recompute-from-scratch baseline on the same
//! runtime, a Dijkstra-based oracle, stream synthesis from edge logs and the
//! measurement harness behind the `sssp-del` binary.

pub mod baseline;
pub mod engine;
pub mod error;
pub mod graph;
pub mod harness;
pub mod message;
pub mod oracle;
pub mod pagerank;
pub mod rmat;
pub mod runtime;
pub mod sssp;
pub mod stream;

pub use engine::{DeletionSummary, Engine, EngineKind, Outcome};
pub use error::{Error, Result};
pub use graph::{VertexId, Weight, INFINITY};
pub use message::{AlgoMessage, Body, MessageKind, TopologyEvent};
pub use oracle::{dijkstra, stability, validate_tree, ReferenceGraph, TreeSnapshot};
pub use runtime::{ExecutionMode, Runtime, RuntimeConfig, RuntimeStats};
pub use sssp::{DeletionPhase, DeletionReport};
