//! Edge logs and synthetic topology streams.
//!
//! An edge log is a text file with one edge per line, `src dst [weight]
//! [timestamp]`; `#` starts a comment line. Loading reduces it to a simple
//! graph: repeated `(src, dst)` pairs keep only their earliest occurrence,
//! unweighted edges get weight 1, and a file without timestamps is numbered
//! 1..n in file order.
//!
//! A stream is produced from a log with a sliding window of span `W`: when an
//! addition with timestamp `T` is emitted, every live edge older than `T - W`
//! that has not been considered yet is deleted with probability `delta`. Each
//! edge gets exactly one coin flip, at its first eligibility.
//!
//! Materialized streams use one event per line: `a src dst weight`,
//! `d src dst`, or `q`.

use std::collections::{HashSet, VecDeque};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{VertexId, Weight};
use crate::message::TopologyEvent;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeRecord {
    pub src: VertexId,
    pub dst: VertexId,
    pub weight: Weight,
    pub timestamp: u64,
}

/// When query markers are injected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarkerPolicy {
    Never,
    /// After every `k` additions and deletions.
    EveryEvents(u64),
    /// Whenever logical time crosses a multiple of the interval.
    EveryTime(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamConfig {
    /// Window span in logical time units.
    pub window: u64,
    /// Probability that an edge leaving the window is deleted.
    pub delete_prob: f64,
    pub markers: MarkerPolicy,
    pub seed: u64,
    /// Which top-PageRank vertex serves as the source (1-based).
    pub source_rank: usize,
}

impl Default for StreamConfig {
    fn default() -> Self {
        StreamConfig {
            window: 1,
            delete_prob: 0.0,
            markers: MarkerPolicy::Never,
            seed: 0,
            source_rank: 1,
        }
    }
}

impl StreamConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::Config("window must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.delete_prob) {
            return Err(Error::Config(format!(
                "delete probability {} outside [0, 1]",
                self.delete_prob
            )));
        }
        match self.markers {
            MarkerPolicy::EveryEvents(0) | MarkerPolicy::EveryTime(0) => {
                Err(Error::Config("query interval must be at least 1".into()))
            }
            _ if self.source_rank == 0 => Err(Error::Config("source rank is 1-based".into())),
            _ => Ok(()),
        }
    }
}

fn format_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

pub fn load_edge_log(path: impl AsRef<Path>) -> Result<Vec<EdgeRecord>> {
    let path = path.as_ref();
    let file = File::open(path)?;
    parse_edge_log(BufReader::new(file), path)
}

/// Parses an edge log; `origin` only labels error messages.
pub fn parse_edge_log(reader: impl BufRead, origin: &Path) -> Result<Vec<EdgeRecord>> {
    let mut records = Vec::new();
    let mut timestamped: Option<bool> = None;

    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if !(2..=4).contains(&fields.len()) {
            return Err(format_error(
                origin,
                line_no,
                format!("expected `src dst [weight] [timestamp]`, got {} fields", fields.len()),
            ));
        }
        let id = |s: &str| {
            s.parse::<u32>()
                .map(VertexId)
                .map_err(|_| format_error(origin, line_no, format!("bad vertex id {s:?}")))
        };
        let src = id(fields[0])?;
        let dst = id(fields[1])?;
        let weight = match fields.get(2) {
            Some(s) => s
                .parse::<f64>()
                .map_err(|_| format_error(origin, line_no, format!("bad weight {s:?}")))?,
            None => 1.0,
        };
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(format_error(
                origin,
                line_no,
                format!("weight must be positive and finite, got {weight}"),
            ));
        }
        let has_ts = fields.len() == 4;
        match timestamped {
            None => timestamped = Some(has_ts),
            Some(t) if t != has_ts => {
                return Err(format_error(
                    origin,
                    line_no,
                    "timestamps must be given on every line or on none",
                ))
            }
            Some(_) => {}
        }
        let timestamp = if has_ts {
            fields[3]
                .parse::<u64>()
                .map_err(|_| format_error(origin, line_no, format!("bad timestamp {:?}", fields[3])))?
        } else {
            0
        };
        records.push(EdgeRecord {
            src,
            dst,
            weight,
            timestamp,
        });
    }

    if timestamped == Some(true) {
        records.sort_by_key(|r| r.timestamp);
    }
    let mut seen = HashSet::with_capacity(records.len());
    records.retain(|r| seen.insert((r.src, r.dst)));
    if timestamped != Some(true) {
        for (i, r) in records.iter_mut().enumerate() {
            r.timestamp = i as u64 + 1;
        }
    }
    Ok(records)
}

pub fn write_edge_log(records: &[EdgeRecord], writer: impl Write) -> Result<()> {
    let mut w = BufWriter::new(writer);
    for r in records {
        writeln!(w, "{} {} {} {}", r.src, r.dst, r.weight, r.timestamp)?;
    }
    w.flush()?;
    Ok(())
}

/// Logical time span covered by a log, inclusive.
pub fn time_span(log: &[EdgeRecord]) -> u64 {
    match (log.first(), log.last()) {
        (Some(a), Some(b)) => b.timestamp - a.timestamp + 1,
        _ => 0,
    }
}

struct Emitter {
    events: Vec<TopologyEvent>,
    markers: MarkerPolicy,
    counted: u64,
    next_mark_time: Option<u64>,
}

impl Emitter {
    fn push(&mut self, event: TopologyEvent) {
        let now = event.timestamp();
        if let MarkerPolicy::EveryTime(interval) = self.markers {
            let next = self
                .next_mark_time
                .get_or_insert_with(|| (now / interval + 1) * interval);
            while now >= *next {
                self.events.push(TopologyEvent::QueryMarker { timestamp: *next });
                *next += interval;
            }
        }
        self.events.push(event);
        self.counted += 1;
        if let MarkerPolicy::EveryEvents(k) = self.markers {
            if self.counted.is_multiple_of(k) {
                self.events.push(TopologyEvent::QueryMarker { timestamp: now });
            }
        }
    }
}

/// Turns a timestamp-ordered log into additions interleaved with window
/// deletions and query markers. Deterministic in `(log, config)`.
pub fn synthesize_stream(log: &[EdgeRecord], config: &StreamConfig) -> Vec<TopologyEvent> {
    debug_assert!(log.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut emitter = Emitter {
        events: Vec::with_capacity(log.len() * 2),
        markers: config.markers,
        counted: 0,
        next_mark_time: None,
    };
    // Added edges not yet given their coin flip, oldest first.
    let mut pending: VecDeque<&EdgeRecord> = VecDeque::new();

    for record in log {
        let now = record.timestamp;
        while let Some(oldest) = pending.front() {
            if oldest.timestamp.saturating_add(config.window) >= now {
                break;
            }
            let oldest = pending.pop_front().expect("front exists");
            if rng.gen_bool(config.delete_prob) {
                emitter.push(TopologyEvent::DeleteEdge {
                    src: oldest.src,
                    dst: oldest.dst,
                    timestamp: now,
                });
            }
        }
        emitter.push(TopologyEvent::AddEdge {
            src: record.src,
            dst: record.dst,
            weight: record.weight,
            timestamp: now,
        });
        pending.push_back(record);
    }
    emitter.events
}

/// Inserts a marker after every `k` additions and deletions.
pub fn inject_markers(events: &[TopologyEvent], k: u64) -> Vec<TopologyEvent> {
    let mut emitter = Emitter {
        events: Vec::with_capacity(events.len() + events.len() / k.max(1) as usize),
        markers: MarkerPolicy::EveryEvents(k),
        counted: 0,
        next_mark_time: None,
    };
    for e in events.iter().filter(|e| !e.is_marker()) {
        emitter.push(*e);
    }
    emitter.events
}

pub fn write_stream(events: &[TopologyEvent], writer: impl Write) -> Result<()> {
    let mut w = BufWriter::new(writer);
    for e in events {
        match e {
            TopologyEvent::AddEdge {
                src, dst, weight, ..
            } => writeln!(w, "a {src} {dst} {weight}")?,
            TopologyEvent::DeleteEdge { src, dst, .. } => writeln!(w, "d {src} {dst}")?,
            TopologyEvent::QueryMarker { .. } => writeln!(w, "q")?,
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_stream(path: impl AsRef<Path>) -> Result<Vec<TopologyEvent>> {
    let path = path.as_ref();
    parse_stream(BufReader::new(File::open(path)?), path)
}

/// Parses a materialized stream. Events are stamped with their line position.
pub fn parse_stream(reader: impl BufRead, origin: &Path) -> Result<Vec<TopologyEvent>> {
    let mut events = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let timestamp = events.len() as u64 + 1;
        let id = |s: &str| {
            s.parse::<u32>()
                .map(VertexId)
                .map_err(|_| format_error(origin, line_no, format!("bad vertex id {s:?}")))
        };
        let event = match fields.as_slice() {
            ["a", src, dst, weight] => {
                let weight: f64 = weight
                    .parse()
                    .map_err(|_| format_error(origin, line_no, format!("bad weight {weight:?}")))?;
                if !(weight > 0.0 && weight.is_finite()) {
                    return Err(format_error(
                        origin,
                        line_no,
                        format!("weight must be positive and finite, got {weight}"),
                    ));
                }
                TopologyEvent::AddEdge {
                    src: id(src)?,
                    dst: id(dst)?,
                    weight,
                    timestamp,
                }
            }
            ["d", src, dst] => TopologyEvent::DeleteEdge {
                src: id(src)?,
                dst: id(dst)?,
                timestamp,
            },
            ["q"] => TopologyEvent::QueryMarker { timestamp },
            _ => {
                return Err(format_error(
                    origin,
                    line_no,
                    format!("expected `a src dst weight`, `d src dst` or `q`, got {line:?}"),
                ))
            }
        };
        events.push(event);
    }
    Ok(events)
}

/// Whether a file looks like a materialized stream rather than an edge log.
pub fn looks_like_stream(path: &Path) -> Result<bool> {
    let reader = BufReader::new(File::open(path)?);
    for line in reader.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        return Ok(matches!(line.split_whitespace().next(), Some("a" | "d" | "q")));
    }
    Ok(false)
}

/// Edges added anywhere in a stream, for source selection.
pub fn added_edges(events: &[TopologyEvent]) -> Vec<(VertexId, VertexId)> {
    events
        .iter()
        .filter_map(|e| match *e {
            TopologyEvent::AddEdge { src, dst, .. } => Some((src, dst)),
            _ => None,
        })
        .collect()
}
