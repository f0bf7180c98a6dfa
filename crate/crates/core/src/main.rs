use std::fs::File;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sssp_del::engine::EngineKind;
use sssp_del::harness::{self, MarkerMode, RunConfig, SourceSpec, WindowSpec};
use sssp_del::rmat::{self, RmatConfig};
use sssp_del::stream::{self, MarkerPolicy, StreamConfig};
use sssp_del::Error;

const EXIT_ERROR: u8 = 1;
const EXIT_VALIDATION: u8 = 2;

#[derive(Parser)]
#[command(name = "sssp-del", version, about = "Streaming single-source shortest paths")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an engine over an edge log or stream file and write results.
    Run(RunArgs),
    /// Synthesize a stream file from an edge log.
    Synth(SynthArgs),
    /// Write an R-MAT edge log.
    GenRmat(RmatArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    SsspDel,
    Baseline,
}

#[derive(Clone, Copy, ValueEnum)]
enum MarkerArg {
    Events,
    Time,
}

#[derive(Args)]
struct WindowArgs {
    /// Window span in time units, or a percentage of the log span ("40%").
    #[arg(long, default_value = "40%")]
    window: WindowSpec,
    /// Probability that an edge leaving the window is deleted.
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    /// Marker spacing; ignored when the stream already contains markers.
    #[arg(long)]
    query_interval: Option<u64>,
    /// Whether the interval counts events or logical time.
    #[arg(long, value_enum, default_value = "events")]
    marker_mode: MarkerArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "sssp-del")]
    engine: EngineArg,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[command(flatten)]
    window: WindowArgs,
    /// Vertex id, or auto:<rank> for the rank-th PageRank vertex.
    #[arg(long, default_value = "auto:1")]
    source: SourceSpec,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Check every snapshot against Dijkstra.
    #[arg(long)]
    validate: bool,
    #[arg(long, default_value_t = 60)]
    watchdog_secs: u64,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    window: WindowArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RmatArgs {
    #[arg(long, default_value_t = 14)]
    scale: u32,
    #[arg(long, default_value_t = 16)]
    edge_factor: u32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Give every edge weight 1.
    #[arg(long)]
    unweighted: bool,
    #[arg(long)]
    out: PathBuf,
}

fn markers(w: &WindowArgs) -> MarkerPolicy {
    match (w.query_interval, w.marker_mode) {
        (None, _) => MarkerPolicy::Never,
        (Some(k), MarkerArg::Events) => MarkerPolicy::EveryEvents(k),
        (Some(k), MarkerArg::Time) => MarkerPolicy::EveryTime(k),
    }
}

fn run(args: RunArgs) -> Result<ExitCode, Error> {
    let config = RunConfig {
        input: args.input,
        engine: match args.engine {
            EngineArg::SsspDel => EngineKind::SsspDel,
            EngineArg::Baseline => EngineKind::Baseline,
        },
        workers: args.workers,
        window: args.window.window,
        delete_prob: args.window.delta,
        query_interval: args.window.query_interval,
        marker_mode: match args.window.marker_mode {
            MarkerArg::Events => MarkerMode::Events,
            MarkerArg::Time => MarkerMode::Time,
        },
        source: args.source,
        seed: args.window.seed,
        out_dir: args.out,
        validate: args.validate,
        watchdog: Duration::from_secs(args.watchdog_secs),
    };
    let report = harness::run(&config)?;
    if let Some(failure) = &report.validation_failure {
        eprintln!("validation failed: {failure}");
        return Ok(ExitCode::from(EXIT_VALIDATION));
    }
    println!(
        "engine {} source {} events {} queries {} final tree {}",
        report.engine,
        report.source,
        report.events,
        report.queries.len(),
        report.final_tree.tree_size()
    );
    if let Some(median) = report.median_latency_ns() {
        println!("median query latency {:.3} ms", median / 1e6);
    }
    if let Some(t) = report.throughput_summary() {
        println!(
            "throughput events/s p25 {:.0} median {:.0} p75 {:.0}",
            t.p25, t.median, t.p75
        );
    }
    if config.validate {
        println!("all snapshots valid");
    }
    Ok(ExitCode::SUCCESS)
}

fn synth(args: SynthArgs) -> Result<ExitCode, Error> {
    let log = stream::load_edge_log(&args.input)?;
    let config = StreamConfig {
        window: args.window.window.resolve(stream::time_span(&log)),
        delete_prob: args.window.delta,
        markers: markers(&args.window),
        seed: args.window.seed,
        source_rank: 1,
    };
    config.validate()?;
    let events = stream::synthesize_stream(&log, &config);
    stream::write_stream(&events, File::create(&args.out)?)?;
    Ok(ExitCode::SUCCESS)
}

fn gen_rmat(args: RmatArgs) -> Result<ExitCode, Error> {
    let config = RmatConfig {
        scale: args.scale,
        edge_factor: args.edge_factor,
        seed: args.seed,
        max_weight: (!args.unweighted).then_some(4.0),
        ..RmatConfig::default()
    };
    let records = rmat::generate(&config)?;
    stream::write_edge_log(&records, File::create(&args.out)?)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_ERROR)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Synth(args) => synth(args),
        Command::GenRmat(args) => gen_rmat(args),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_ERROR)
    })
}
