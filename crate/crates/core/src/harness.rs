//! End-to-end runs: prepare a stream, drive an engine through it, measure
//! query latency, stability and throughput, and write CSV results.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::engine::{DeletionSummary, Engine, EngineKind};
use crate::error::{Error, Result};
use crate::graph::{VertexId, INFINITY};
use crate::message::TopologyEvent;
use crate::oracle::{stability, validate_tree, ReferenceGraph, SnapshotEntry, TreeSnapshot, Violation};
use crate::pagerank::select_sources;
use crate::runtime::{RuntimeConfig, RuntimeStats, DEFAULT_WATCHDOG};
use crate::stream::{
    added_edges, inject_markers, load_edge_log, load_stream, looks_like_stream, synthesize_stream,
    time_span, MarkerPolicy, StreamConfig,
};

/// Events per throughput measurement window.
pub const THROUGHPUT_WINDOW: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceSpec {
    Vertex(VertexId),
    /// The n-th highest PageRank vertex on the transposed final graph.
    Auto(usize),
}

impl FromStr for SourceSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad source {s:?} (expected <id> or auto:<rank>)"));
        match s.strip_prefix("auto:") {
            Some(rank) => match rank.parse::<usize>() {
                Ok(r) if r >= 1 => Ok(SourceSpec::Auto(r)),
                _ => Err(bad()),
            },
            None if s == "auto" => Ok(SourceSpec::Auto(1)),
            None => s.parse::<u32>().map(|v| SourceSpec::Vertex(VertexId(v))).map_err(|_| bad()),
        }
    }
}

impl fmt::Display for SourceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceSpec::Vertex(v) => write!(f, "{v}"),
            SourceSpec::Auto(r) => write!(f, "auto:{r}"),
        }
    }
}

/// Window span, absolute or as a percentage of the log's time span.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WindowSpec {
    Absolute(u64),
    Percent(f64),
}

impl WindowSpec {
    pub fn resolve(self, span: u64) -> u64 {
        match self {
            WindowSpec::Absolute(w) => w,
            WindowSpec::Percent(p) => ((span as f64 * p / 100.0).round() as u64).max(1),
        }
    }
}

impl FromStr for WindowSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad window {s:?} (expected <units> or <pct>%)"));
        match s.strip_suffix('%') {
            Some(p) => match p.parse::<f64>() {
                Ok(p) if p > 0.0 && p <= 100.0 => Ok(WindowSpec::Percent(p)),
                _ => Err(bad()),
            },
            None => match s.parse::<u64>() {
                Ok(w) if w > 0 => Ok(WindowSpec::Absolute(w)),
                _ => Err(bad()),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarkerMode {
    Events,
    Time,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: PathBuf,
    pub engine: EngineKind,
    pub workers: usize,
    pub window: WindowSpec,
    pub delete_prob: f64,
    pub query_interval: Option<u64>,
    pub marker_mode: MarkerMode,
    pub source: SourceSpec,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub validate: bool,
    pub watchdog: Duration,
}

impl RunConfig {
    pub fn new(input: impl Into<PathBuf>) -> Self {
        RunConfig {
            input: input.into(),
            engine: EngineKind::SsspDel,
            workers: 1,
            window: WindowSpec::Percent(40.0),
            delete_prob: 0.0,
            query_interval: None,
            marker_mode: MarkerMode::Events,
            source: SourceSpec::Auto(1),
            seed: 0,
            out_dir: None,
            validate: false,
            watchdog: DEFAULT_WATCHDOG,
        }
    }

    pub fn runtime_config(&self) -> RuntimeConfig {
        RuntimeConfig {
            watchdog: self.watchdog,
            ..RuntimeConfig::with_workers(self.workers)
        }
    }
}

/// A fully prepared input: ordered events and the chosen source.
#[derive(Debug, Clone)]
pub struct PreparedStream {
    pub events: Vec<TopologyEvent>,
    pub source: VertexId,
}

fn resolve_source(spec: SourceSpec, edges: Vec<(VertexId, VertexId)>) -> Result<VertexId> {
    match spec {
        SourceSpec::Vertex(v) => Ok(v),
        SourceSpec::Auto(rank) => Ok(select_sources(edges, rank)?[rank - 1]),
    }
}

/// Loads the input as a materialized stream or as an edge log to synthesize
/// from, and picks the source.
pub fn prepare_stream(config: &RunConfig) -> Result<PreparedStream> {
    if config.workers == 0 {
        return Err(Error::Config("worker count must be at least 1".into()));
    }
    if looks_like_stream(&config.input)? {
        let mut events = load_stream(&config.input)?;
        if !events.iter().any(|e| e.is_marker()) {
            if let Some(k) = config.query_interval {
                if k == 0 {
                    return Err(Error::Config("query interval must be at least 1".into()));
                }
                events = inject_markers(&events, k);
            }
        }
        let source = resolve_source(config.source, added_edges(&events))?;
        return Ok(PreparedStream { events, source });
    }

    let log = load_edge_log(&config.input)?;
    let markers = match (config.query_interval, config.marker_mode) {
        (None, _) => MarkerPolicy::Never,
        (Some(k), MarkerMode::Events) => MarkerPolicy::EveryEvents(k),
        (Some(k), MarkerMode::Time) => MarkerPolicy::EveryTime(k),
    };
    let stream_config = StreamConfig {
        window: config.window.resolve(time_span(&log)),
        delete_prob: config.delete_prob,
        markers,
        seed: config.seed,
        source_rank: match config.source {
            SourceSpec::Auto(r) => r,
            SourceSpec::Vertex(_) => 1,
        },
    };
    stream_config.validate()?;
    let source = resolve_source(config.source, log.iter().map(|r| (r.src, r.dst)).collect())?;
    let events = synthesize_stream(&log, &stream_config);
    Ok(PreparedStream { events, source })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryRecord {
    /// Additions and deletions ingested before the marker.
    pub event_index: u64,
    pub latency_ns: u64,
    pub stability_pct: f64,
    pub tree_size: usize,
}

impl QueryRecord {
    pub fn latency_ms(&self) -> f64 {
        self.latency_ns as f64 / 1e6
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughputRecord {
    pub event_index: u64,
    pub events_per_sec: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughputSummary {
    pub p25: f64,
    pub median: f64,
    pub p75: f64,
}

/// Linearly interpolated quantile of unsorted samples.
pub fn quantile(samples: &[f64], q: f64) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64))
}

#[derive(Debug, Clone)]
pub struct ValidationFailure {
    pub event_index: u64,
    pub violation: Violation,
}

impl fmt::Display for ValidationFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "snapshot after event {}: {}", self.event_index, self.violation)
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub engine: EngineKind,
    pub source: VertexId,
    pub events: u64,
    pub queries: Vec<QueryRecord>,
    /// Snapshots at each marker, kept only when requested.
    pub snapshots: Vec<TreeSnapshot>,
    pub throughput: Vec<ThroughputRecord>,
    pub final_tree: TreeSnapshot,
    pub validation_failure: Option<ValidationFailure>,
    pub tolerance_fallbacks: usize,
    pub deletions: DeletionSummary,
    pub stats: RuntimeStats,
}

impl RunReport {
    pub fn throughput_summary(&self) -> Option<ThroughputSummary> {
        let rates: Vec<f64> = self.throughput.iter().map(|t| t.events_per_sec).collect();
        Some(ThroughputSummary {
            p25: quantile(&rates, 0.25)?,
            median: quantile(&rates, 0.5)?,
            p75: quantile(&rates, 0.75)?,
        })
    }

    pub fn median_latency_ns(&self) -> Option<f64> {
        let l: Vec<f64> = self.queries.iter().map(|q| q.latency_ns as f64).collect();
        quantile(&l, 0.5)
    }
}

/// Options for [`run_events`] beyond the engine and runtime.
#[derive(Debug, Clone, Copy, Default)]
pub struct DriveOptions {
    pub validate: bool,
    pub keep_snapshots: bool,
}

/// Drives one engine through an event sequence. Marker handling and oracle
/// validation are excluded from throughput windows.
pub fn run_events(
    events: &[TopologyEvent],
    source: VertexId,
    kind: EngineKind,
    runtime: &RuntimeConfig,
    options: DriveOptions,
) -> Result<RunReport> {
    let mut engine = Engine::new(kind, source, runtime)?;
    let mut reference = options.validate.then(|| ReferenceGraph::new(source));
    let mut queries = Vec::new();
    let mut snapshots = Vec::new();
    let mut throughput = Vec::new();
    let mut previous: Option<TreeSnapshot> = None;
    let mut failure = None;
    let mut fallbacks = 0;

    let mut window_start = Instant::now();
    let mut window_excluded = Duration::ZERO;
    let mut window_events = 0u64;

    let mut check = |snap: &TreeSnapshot, reference: &Option<ReferenceGraph>| {
        let graph = reference.as_ref()?;
        let report = validate_tree(snap, graph, source);
        fallbacks += report.tolerance_fallbacks;
        report.violation.map(|violation| ValidationFailure {
            event_index: snap.event_index,
            violation,
        })
    };

    for event in events {
        if event.is_marker() {
            let marked = Instant::now();
            let snap = engine.query()?;
            let latency = marked.elapsed();
            queries.push(QueryRecord {
                event_index: snap.event_index,
                latency_ns: (latency.as_nanos() as u64).max(1),
                stability_pct: previous.as_ref().map_or(100.0, |p| stability(p, &snap)),
                tree_size: snap.tree_size(),
            });
            failure = check(&snap, &reference);
            window_excluded += marked.elapsed();
            if failure.is_some() {
                break;
            }
            if options.keep_snapshots {
                snapshots.push(snap.clone());
            }
            previous = Some(snap);
            continue;
        }

        if let Some(graph) = reference.as_mut() {
            graph.apply(event)?;
        }
        engine.ingest_event(event)?;
        window_events += 1;
        if window_events == THROUGHPUT_WINDOW {
            engine.settle()?;
            let busy = window_start.elapsed().saturating_sub(window_excluded);
            throughput.push(ThroughputRecord {
                event_index: engine.events(),
                events_per_sec: window_events as f64 / busy.as_secs_f64().max(1e-9),
            });
            window_start = Instant::now();
            window_excluded = Duration::ZERO;
            window_events = 0;
        }
    }

    let final_tree = engine.query()?;
    if failure.is_none() {
        failure = check(&final_tree, &reference);
    }
    Ok(RunReport {
        engine: kind,
        source,
        events: engine.events(),
        queries,
        snapshots,
        throughput,
        final_tree,
        validation_failure: failure,
        tolerance_fallbacks: fallbacks,
        deletions: engine.deletion_summary(),
        stats: engine.stats(),
    })
}

/// Prepares the input, runs it and writes results to the output directory if
/// one is configured.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    let prepared = prepare_stream(config)?;
    log::info!(
        "{} events, source {}, engine {}, {} worker(s)",
        prepared.events.len(),
        prepared.source,
        config.engine,
        config.workers
    );
    let report = run_events(
        &prepared.events,
        prepared.source,
        config.engine,
        &config.runtime_config(),
        DriveOptions {
            validate: config.validate,
            keep_snapshots: false,
        },
    )?;
    if let Some(dir) = &config.out_dir {
        write_outputs(&report, dir)?;
    }
    Ok(report)
}

pub fn write_outputs(report: &RunReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_queries(&report.queries, File::create(dir.join("queries.csv"))?)?;
    write_throughput(&report.throughput, File::create(dir.join("throughput.csv"))?)?;
    dump_tree(&report.final_tree, dir.join("tree_final.csv"))
}

pub fn write_queries(records: &[QueryRecord], writer: impl Write) -> Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "event_index,latency_ms,stability_pct,tree_size")?;
    for r in records {
        writeln!(
            w,
            "{},{:.6},{:.4},{}",
            r.event_index,
            r.latency_ms(),
            r.stability_pct,
            r.tree_size
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_throughput(records: &[ThroughputRecord], writer: impl Write) -> Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "event_index,events_per_sec")?;
    for r in records {
        writeln!(w, "{},{:.1}", r.event_index, r.events_per_sec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn dump_tree(snap: &TreeSnapshot, path: impl AsRef<Path>) -> Result<()> {
    write_tree(snap, File::create(path)?)
}

/// `vertex,predecessor,distance` per line in vertex order; `-` marks no
/// predecessor and `inf` an unreachable vertex.
pub fn write_tree(snap: &TreeSnapshot, writer: impl Write) -> Result<()> {
    let mut w = BufWriter::new(writer);
    for e in snap.entries() {
        match e.predecessor {
            Some(p) => write!(w, "{},{},", e.vertex, p)?,
            None => write!(w, "{},-,", e.vertex)?,
        }
        if e.distance == INFINITY {
            writeln!(w, "inf")?;
        } else {
            writeln!(w, "{}", e.distance)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn parse_tree(reader: impl BufRead, origin: &Path) -> Result<Vec<SnapshotEntry>> {
    let mut entries = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |what: &str| Error::Format {
            path: origin.to_path_buf(),
            line: i + 1,
            message: format!("bad {what} in {line:?}"),
        };
        let fields: Vec<&str> = line.trim().split(',').collect();
        let [vertex, predecessor, distance] = fields.as_slice() else {
            return Err(bad("field count"));
        };
        let vertex = VertexId(vertex.parse().map_err(|_| bad("vertex"))?);
        let predecessor = match *predecessor {
            "-" => None,
            p => Some(VertexId(p.parse().map_err(|_| bad("predecessor"))?)),
        };
        let distance = match *distance {
            "inf" => INFINITY,
            d => d.parse().map_err(|_| bad("distance"))?,
        };
        entries.push(SnapshotEntry {
            vertex,
            predecessor,
            distance,
        });
    }
    Ok(entries)
}

pub fn read_tree(path: impl AsRef<Path>) -> Result<Vec<SnapshotEntry>> {
    let path = path.as_ref();
    parse_tree(BufReader::new(File::open(path)?), path)
}
