//! Algorithmic messages exchanged between vertices and topology events read
//! from the input stream.

use std::fmt;

use crate::graph::{VertexId, Weight};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MessageKind {
    DistanceQuery,
    DistanceUpdate,
    SetToInfinity,
    AddToSuccessor,
    RemoveFromSuccessor,
}

impl MessageKind {
    pub const ALL: [MessageKind; 5] = [
        MessageKind::DistanceQuery,
        MessageKind::DistanceUpdate,
        MessageKind::SetToInfinity,
        MessageKind::AddToSuccessor,
        MessageKind::RemoveFromSuccessor,
    ];

    pub(crate) fn index(self) -> usize {
        self as usize
    }
}

/// Message body. Only `DistanceUpdate` carries a payload.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Body {
    DistanceQuery,
    DistanceUpdate(Weight),
    SetToInfinity,
    AddToSuccessor,
    RemoveFromSuccessor,
}

impl Body {
    pub fn kind(&self) -> MessageKind {
        match self {
            Body::DistanceQuery => MessageKind::DistanceQuery,
            Body::DistanceUpdate(_) => MessageKind::DistanceUpdate,
            Body::SetToInfinity => MessageKind::SetToInfinity,
            Body::AddToSuccessor => MessageKind::AddToSuccessor,
            Body::RemoveFromSuccessor => MessageKind::RemoveFromSuccessor,
        }
    }

    pub fn distance(&self) -> Option<Weight> {
        match *self {
            Body::DistanceUpdate(d) => Some(d),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgoMessage {
    pub sender: VertexId,
    pub receiver: VertexId,
    pub body: Body,
}

impl AlgoMessage {
    pub fn new(sender: VertexId, receiver: VertexId, body: Body) -> Self {
        AlgoMessage {
            sender,
            receiver,
            body,
        }
    }

    pub fn kind(&self) -> MessageKind {
        self.body.kind()
    }
}

impl fmt::Display for AlgoMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} {}->{}", self.kind(), self.sender, self.receiver)?;
        if let Some(d) = self.body.distance() {
            write!(f, " ({d})")?;
        }
        Ok(())
    }
}

/// One entry of the input stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TopologyEvent {
    AddEdge {
        src: VertexId,
        dst: VertexId,
        weight: Weight,
        timestamp: u64,
    },
    DeleteEdge {
        src: VertexId,
        dst: VertexId,
        timestamp: u64,
    },
    QueryMarker {
        timestamp: u64,
    },
}

impl TopologyEvent {
    pub fn add(src: u32, dst: u32, weight: Weight) -> Self {
        TopologyEvent::AddEdge {
            src: VertexId(src),
            dst: VertexId(dst),
            weight,
            timestamp: 0,
        }
    }

    pub fn delete(src: u32, dst: u32) -> Self {
        TopologyEvent::DeleteEdge {
            src: VertexId(src),
            dst: VertexId(dst),
            timestamp: 0,
        }
    }

    pub fn query() -> Self {
        TopologyEvent::QueryMarker { timestamp: 0 }
    }

    pub fn timestamp(&self) -> u64 {
        match *self {
            TopologyEvent::AddEdge { timestamp, .. }
            | TopologyEvent::DeleteEdge { timestamp, .. }
            | TopologyEvent::QueryMarker { timestamp } => timestamp,
        }
    }

    pub fn is_marker(&self) -> bool {
        matches!(self, TopologyEvent::QueryMarker { .. })
    }
}
