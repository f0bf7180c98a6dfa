//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line; the
//! process exits non-zero if any criterion fails.
//!
//! Set `ACCEPTANCE_ONLY=1,5` to run a subset.

use std::collections::{BTreeSet, HashMap};
use std::process::ExitCode;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sssp_del::harness::{parse_tree, quantile, run_events, write_tree, DriveOptions, RunReport};
use sssp_del::pagerank::select_sources;
use sssp_del::rmat::{self, RmatConfig};
use sssp_del::stream::{synthesize_stream, EdgeRecord, MarkerPolicy, StreamConfig};
use sssp_del::{Engine, EngineKind, RuntimeConfig, TopologyEvent, VertexId};

type Outcome = Result<String, String>;

fn runtime(workers: usize) -> RuntimeConfig {
    if workers == 1 {
        RuntimeConfig::with_workers(1)
    } else {
        RuntimeConfig::threaded(workers)
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Random simple digraph on `n` vertices with `m` edges, stamped 1..m.
fn random_log(rng: &mut ChaCha8Rng, n: u32, m: usize, integer_weights: bool) -> Vec<EdgeRecord> {
    let mut seen = BTreeSet::new();
    let mut log = Vec::with_capacity(m);
    while log.len() < m {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a == b || !seen.insert((a, b)) {
            continue;
        }
        let weight = if integer_weights {
            rng.gen_range(1..=4) as f64
        } else {
            loop {
                let w = rng.gen::<f64>() * 4.0;
                if w > 0.0 {
                    break w;
                }
            }
        };
        log.push(EdgeRecord {
            src: VertexId(a),
            dst: VertexId(b),
            weight,
            timestamp: log.len() as u64 + 1,
        });
    }
    log
}

fn rmat_log(scale: u32, weighted: bool, seed: u64) -> Vec<EdgeRecord> {
    rmat::generate(&RmatConfig {
        scale,
        max_weight: weighted.then_some(4.0),
        seed,
        ..RmatConfig::default()
    })
    .expect("valid generator parameters")
}

fn top_source(log: &[EdgeRecord]) -> VertexId {
    select_sources(log.iter().map(|r| (r.src, r.dst)), 1).expect("non-empty graph")[0]
}

fn drive(
    events: &[TopologyEvent],
    source: VertexId,
    kind: EngineKind,
    workers: usize,
    options: DriveOptions,
) -> Result<RunReport, String> {
    run_events(events, source, kind, &runtime(workers), options).map_err(|e| e.to_string())
}

struct FuzzTotals {
    streams: usize,
    events: u64,
    snapshots: usize,
    deletions: u64,
    tree_deletions: u64,
    max_set_to_infinity: u64,
    bound_violations: u64,
    isolation_violations: u64,
    monotone_checks: usize,
    monotone_violations: Vec<String>,
    failures: Vec<String>,
    fallbacks: usize,
}

/// Fuzz campaign behind criteria 1, 2 and 4.
fn fuzz_campaign() -> FuzzTotals {
    let deltas = [0.0, 0.1, 0.5, 1.0];
    let workers = [1, 4, 8];
    let mut totals = FuzzTotals {
        streams: 0,
        events: 0,
        snapshots: 0,
        deletions: 0,
        tree_deletions: 0,
        max_set_to_infinity: 0,
        bound_violations: 0,
        isolation_violations: 0,
        monotone_checks: 0,
        monotone_violations: Vec::new(),
        failures: Vec::new(),
        fallbacks: 0,
    };
    for i in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xF022 + i);
        let delta = deltas[i as usize % 4];
        let w = workers[(i as usize / 4) % 3];
        let n = rng.gen_range(200..=2000u32);
        let target_events = rng.gen_range(5_000..=100_000usize);
        let m = ((target_events as f64 / (1.0 + 0.6 * delta)) as usize)
            .min((n as usize) * (n as usize - 1) / 3);
        let log = random_log(&mut rng, n, m, i % 2 == 0);
        let config = StreamConfig {
            window: rng.gen_range(m as u64 / 20..=m as u64 / 2).max(1),
            delete_prob: delta,
            markers: MarkerPolicy::EveryEvents(500),
            seed: i,
            source_rank: 1,
        };
        let events = synthesize_stream(&log, &config);
        let source = log[0].src;
        let label = format!("stream {i} (n={n}, events={}, delta={delta}, workers={w})", events.len());
        let report = match drive(
            &events,
            source,
            EngineKind::SsspDel,
            w,
            DriveOptions {
                validate: true,
                keep_snapshots: delta == 0.0,
            },
        ) {
            Ok(r) => r,
            Err(e) => {
                totals.failures.push(format!("{label}: {e}"));
                continue;
            }
        };
        if let Some(f) = &report.validation_failure {
            totals.failures.push(format!("{label}: {f}"));
        }
        totals.streams += 1;
        totals.events += report.events;
        totals.snapshots += report.queries.len() + 1;
        totals.fallbacks += report.tolerance_fallbacks;
        let d = report.deletions;
        totals.deletions += d.deletions;
        totals.tree_deletions += d.tree_edges;
        totals.max_set_to_infinity = totals.max_set_to_infinity.max(d.max_set_to_infinity);
        totals.bound_violations += d.bound_violations;
        totals.isolation_violations += d.isolation_violations;
        if delta == 0.0 {
            let mut snaps = report.snapshots.clone();
            snaps.push(report.final_tree.clone());
            for pair in snaps.windows(2) {
                for (x, before) in pair[0].distances() {
                    totals.monotone_checks += 1;
                    match pair[1].distance(x) {
                        Some(after) if after <= before => {}
                        other => totals
                            .monotone_violations
                            .push(format!("{label}: vertex {x} {before} -> {other:?}")),
                    }
                }
            }
        }
    }
    totals
}

fn criterion_1(f: &FuzzTotals) -> Outcome {
    ensure(f.failures.is_empty(), || {
        format!("{} failing streams, first: {}", f.failures.len(), f.failures[0])
    })?;
    ensure(f.streams == 200, || format!("only {} streams completed", f.streams))?;
    ensure(f.fallbacks == 0, || {
        format!("{} distances needed the tolerance fallback", f.fallbacks)
    })?;
    Ok(format!(
        "200 streams, {} events, {} snapshots valid with exact distances",
        f.events, f.snapshots
    ))
}

fn criterion_2(f: &FuzzTotals) -> Outcome {
    ensure(f.streams == 200, || format!("{} streams failed to finish", 200 - f.streams))?;
    ensure(f.bound_violations == 0, || {
        format!("{} deletions exceeded the edge count", f.bound_violations)
    })?;
    Ok(format!(
        "{} deletions ({} tree edges), max SetToInfinity per deletion {}, all runs quiescent",
        f.deletions, f.tree_deletions, f.max_set_to_infinity
    ))
}

/// Single-worker traced runs: between a deletion's edge removal and the
/// recomputation sweep, every handled message must be `SetToInfinity`.
fn criterion_3(f: &FuzzTotals) -> Outcome {
    ensure(f.isolation_violations == 0, || {
        format!("{} deletions handled other messages while invalidating", f.isolation_violations)
    })?;
    let mut windows = 0;
    let mut checked = 0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x150 + seed);
        let log = random_log(&mut rng, 300, 3_000, seed % 2 == 0);
        let events = synthesize_stream(
            &log,
            &StreamConfig {
                window: 300,
                delete_prob: 0.5,
                markers: MarkerPolicy::EveryEvents(500),
                seed,
                source_rank: 1,
            },
        );
        let mut engine = Engine::new(EngineKind::SsspDel, log[0].src, &RuntimeConfig::default().traced())
            .map_err(|e| e.to_string())?;
        for e in &events {
            engine.ingest_event(e).map_err(|e| e.to_string())?;
        }
        let traces = engine.runtime().trace().map_err(|e| e.to_string())?;
        let mut invalidating = false;
        for entry in &traces[0] {
            match entry {
                sssp_del::runtime::TraceEntry::Topology(label) => {
                    if label.starts_with("RemoveOutEdge") {
                        invalidating = true;
                        windows += 1;
                    } else {
                        invalidating = false;
                    }
                }
                sssp_del::runtime::TraceEntry::Message { message, .. } if invalidating => {
                    checked += 1;
                    ensure(message.kind() == sssp_del::MessageKind::SetToInfinity, || {
                        format!("{message} handled during invalidation (seed {seed})")
                    })?;
                }
                _ => {}
            }
        }
    }
    Ok(format!(
        "{} fuzz deletions clean by counters; {windows} traced invalidation drains, {checked} messages, all SetToInfinity",
        f.deletions
    ))
}

fn criterion_4(f: &FuzzTotals) -> Outcome {
    ensure(f.monotone_violations.is_empty(), || {
        format!("{} increases, first: {}", f.monotone_violations.len(), f.monotone_violations[0])
    })?;
    ensure(f.monotone_checks > 0, || "no addition-only snapshots compared".into())?;
    Ok(format!("{} per-vertex distance pairs non-increasing", f.monotone_checks))
}

fn window_stream(log: &[EdgeRecord], delta: f64, seed: u64) -> Vec<TopologyEvent> {
    let window = (log.len() as f64 * 0.4).round() as u64;
    synthesize_stream(
        log,
        &StreamConfig {
            window,
            delete_prob: delta,
            markers: MarkerPolicy::EveryEvents((window / 10).max(1)),
            seed,
            source_rank: 1,
        },
    )
}

fn criterion_5() -> Outcome {
    let log = rmat_log(14, true, 5);
    let source = top_source(&log);
    let events = window_stream(&log, 0.5, 5);
    let opts = DriveOptions::default();
    let dynamic = drive(&events, source, EngineKind::SsspDel, 1, opts)?;
    let baseline = drive(&events, source, EngineKind::Baseline, 1, opts)?;
    let lat = |r: &RunReport| -> Vec<f64> { r.queries.iter().map(|q| q.latency_ns as f64).collect() };
    let (d, b) = (lat(&dynamic), lat(&baseline));
    ensure(d.len() == b.len() && d.len() >= 8, || format!("{} queries", d.len()))?;
    let speedup = quantile(&b, 0.5).unwrap() / quantile(&d, 0.5).unwrap();
    let ratios: Vec<f64> = b.iter().zip(&d).map(|(b, d)| b / d).collect();
    let q = ratios.len() / 4;
    let first = quantile(&ratios[..q], 0.5).unwrap();
    let last = quantile(&ratios[ratios.len() - q..], 0.5).unwrap();
    let summary = format!(
        "{} edges, {} events, {} queries; median latency {:.3} ms vs {:.3} ms baseline, speedup {speedup:.1}x; ratio first quartile {first:.1}x, last quartile {last:.1}x",
        log.len(),
        events.len(),
        d.len(),
        quantile(&d, 0.5).unwrap() / 1e6,
        quantile(&b, 0.5).unwrap() / 1e6
    );
    ensure(speedup >= 2.0, || format!("speedup below 2x: {summary}"))?;
    ensure(last >= first, || format!("ratio did not improve: {summary}"))?;
    Ok(summary)
}

fn criterion_6() -> Outcome {
    let log = rmat_log(12, false, 6);
    let source = top_source(&log);
    let events = window_stream(&log, 0.1, 6);
    let opts = DriveOptions::default();
    let dynamic = drive(&events, source, EngineKind::SsspDel, 1, opts)?;
    let baseline = drive(&events, source, EngineKind::Baseline, 1, opts)?;
    let points = dynamic.queries.len();
    ensure(points == baseline.queries.len() && points > 0, || "query count mismatch".into())?;
    let wins = dynamic
        .queries
        .iter()
        .zip(&baseline.queries)
        .filter(|(d, b)| d.stability_pct >= b.stability_pct)
        .count();
    let mean = |r: &RunReport| r.queries.iter().map(|q| q.stability_pct).sum::<f64>() / points as f64;
    let share = wins as f64 / points as f64;
    let summary = format!(
        "unweighted RMAT, {points} queries; dynamic at least as stable at {wins} ({:.0}%); mean stability {:.2}% vs {:.2}%",
        share * 100.0,
        mean(&dynamic),
        mean(&baseline)
    );
    ensure(share >= 0.8, || summary.clone())?;
    Ok(summary)
}

fn criterion_7() -> Outcome {
    let log = rmat_log(13, true, 7);
    let source = top_source(&log);
    let mut medians = Vec::new();
    for delta in [0.01, 0.1, 0.5, 1.0] {
        let events = window_stream(&log, delta, 7);
        let report = drive(&events, source, EngineKind::SsspDel, 1, DriveOptions::default())?;
        let t = report
            .throughput_summary()
            .ok_or_else(|| "no throughput windows".to_string())?;
        medians.push((delta, t.median));
    }
    let at = |d: f64| medians.iter().find(|(x, _)| *x == d).unwrap().1;
    let summary = format!(
        "{} edges; median events/s {}",
        log.len(),
        medians
            .iter()
            .map(|(d, m)| format!("delta {d}: {m:.0}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    ensure(at(0.1) > at(1.0), || format!("not inversely related: {summary}"))?;
    ensure(at(0.1) >= 10_000.0 && at(0.01) >= 10_000.0, || format!("below floor: {summary}"))?;
    Ok(summary)
}

fn criterion_8() -> Outcome {
    let mut markers = 0;
    for (i, (delta, workers)) in [(0.0, 1), (0.1, 1), (0.5, 4), (1.0, 1), (0.5, 1), (1.0, 4)]
        .into_iter()
        .enumerate()
    {
        let log = rmat_log(10, i % 2 == 0, 80 + i as u64);
        let source = top_source(&log);
        let events = window_stream(&log, delta, i as u64);
        let opts = DriveOptions {
            validate: false,
            keep_snapshots: true,
        };
        let dynamic = drive(&events, source, EngineKind::SsspDel, workers, opts)?;
        let baseline = drive(&events, source, EngineKind::Baseline, workers, opts)?;
        ensure(dynamic.snapshots.len() == baseline.snapshots.len(), || "marker count differs".into())?;
        for (d, b) in dynamic.snapshots.iter().zip(&baseline.snapshots) {
            ensure(d.distances() == b.distances(), || {
                format!("distances differ at event {} (delta {delta})", d.event_index)
            })?;
            markers += 1;
        }
        ensure(dynamic.final_tree.distances() == baseline.final_tree.distances(), || {
            "final distances differ".into()
        })?;
    }
    Ok(format!("6 streams, {markers} markers with identical distance vectors"))
}

fn criterion_9() -> Outcome {
    let mut compared = 0;
    for seed in 0..4u64 {
        let log = rmat_log(11, seed % 2 == 0, 90 + seed);
        let source = top_source(&log);
        let events = window_stream(&log, [0.0, 0.1, 0.5, 1.0][seed as usize], seed);
        let mut columns = Vec::new();
        for workers in [1, 2, 8] {
            let report = drive(&events, source, EngineKind::SsspDel, workers, DriveOptions::default())?;
            let mut buf = Vec::new();
            write_tree(&report.final_tree, &mut buf).map_err(|e| e.to_string())?;
            let entries = parse_tree(buf.as_slice(), std::path::Path::new("dump")).map_err(|e| e.to_string())?;
            columns.push(
                entries
                    .iter()
                    .map(|e| (e.vertex, e.distance.to_bits()))
                    .collect::<Vec<_>>(),
            );
        }
        ensure(columns[0] == columns[1] && columns[0] == columns[2], || {
            format!("distance columns differ for seed {seed}")
        })?;
        compared += columns[0].len();
    }
    Ok(format!("4 streams, {compared} vertices with identical distances for workers 1, 2 and 8"))
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut log: Vec<EdgeRecord> = (0..30_000u32)
        .map(|i| EdgeRecord {
            src: VertexId(i),
            dst: VertexId(i + 1),
            weight: 1.0,
            timestamp: 0,
        })
        .collect();
    log.shuffle(&mut rng);
    for (i, r) in log.iter_mut().enumerate() {
        r.timestamp = i as u64 + 1;
    }
    let window = 500;
    let config = |delta| StreamConfig {
        window,
        delete_prob: delta,
        markers: MarkerPolicy::Never,
        seed: 1234,
        source_rank: 1,
    };
    let deletions = |events: &[TopologyEvent]| {
        events
            .iter()
            .filter(|e| matches!(e, TopologyEvent::DeleteEdge { .. }))
            .count()
    };

    let none = deletions(&synthesize_stream(&log, &config(0.0)));
    ensure(none == 0, || format!("delta 0 produced {none} deletions"))?;

    // Edges eligible by the end of the stream, counted directly from the log.
    let last = log.last().unwrap().timestamp;
    let eligible = log.iter().filter(|r| r.timestamp + window < last).count();
    let full = synthesize_stream(&log, &config(1.0));
    let added: HashMap<_, _> = log.iter().map(|r| ((r.src, r.dst), r.timestamp)).collect();
    let mut live: HashMap<(VertexId, VertexId), u64> = HashMap::new();
    for e in &full {
        match *e {
            TopologyEvent::AddEdge { src, dst, timestamp, .. } => {
                if let Some(((a, b), ts)) = live.iter().find(|(_, &ts)| ts + window < timestamp) {
                    return Err(format!("expired edge {a}->{b} (t={ts}) alive at {timestamp}"));
                }
                live.insert((src, dst), added[&(src, dst)]);
            }
            TopologyEvent::DeleteEdge { src, dst, .. } => {
                live.remove(&(src, dst)).ok_or("deleted edge not live")?;
            }
            TopologyEvent::QueryMarker { .. } => {}
        }
    }
    ensure(deletions(&full) == eligible, || {
        format!("delta 1 deleted {} of {eligible} eligible", deletions(&full))
    })?;

    let half = deletions(&synthesize_stream(&log, &config(0.5)));
    let mean = eligible as f64 * 0.5;
    let sigma = (eligible as f64 * 0.25).sqrt();
    let z = (half as f64 - mean) / sigma;
    ensure(eligible >= 10_000, || format!("only {eligible} eligible edges"))?;
    ensure(z.abs() <= 3.0, || format!("delta 0.5: {half} deletions, z = {z:.2}"))?;
    Ok(format!(
        "delta 0: 0 deletions; delta 1: {eligible}/{eligible} expired edges deleted; delta 0.5: {half} deletions of {eligible}, z = {z:.2}"
    ))
}

fn main() -> ExitCode {
    let only: Option<BTreeSet<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let wanted = |n: u32| only.as_ref().is_none_or(|s| s.contains(&n));

    let names = [
        "oracle equivalence",
        "termination bound",
        "two-phase isolation",
        "monotonicity without deletions",
        "latency trend",
        "stability trend",
        "throughput trend",
        "cross-engine equivalence",
        "schedule independence",
        "stream generator statistics",
    ];
    let fuzz = if (1..=4).any(wanted) {
        let started = Instant::now();
        let f = fuzz_campaign();
        println!("fuzz campaign finished in {:.1}s", started.elapsed().as_secs_f64());
        Some(f)
    } else {
        None
    };

    let mut failed = 0;
    for n in 1..=10u32 {
        if !wanted(n) {
            continue;
        }
        let started = Instant::now();
        let outcome = match n {
            1 => criterion_1(fuzz.as_ref().unwrap()),
            2 => criterion_2(fuzz.as_ref().unwrap()),
            3 => criterion_3(fuzz.as_ref().unwrap()),
            4 => criterion_4(fuzz.as_ref().unwrap()),
            5 => criterion_5(),
            6 => criterion_6(),
            7 => criterion_7(),
            8 => criterion_8(),
            9 => criterion_9(),
            _ => criterion_10(),
        };
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {n} ({}): {detail} [{secs:.1}s]", names[n as usize - 1]),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {n} ({}): {detail} [{secs:.1}s]", names[n as usize - 1]);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
