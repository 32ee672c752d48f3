//! Command-line front end: config files, experiment sweeps, CSV output and
//! cross-engine comparison.
//!
//! A config file is the network description with an optional
//! `"experiment"` object; command-line flags override its fields.
//!
//! ```json
//! {
//!   "nodes": [{"id": "s"}, {"id": "1", "buffer": 2}, {"id": "d"}],
//!   "edges": [{"from": "s", "to": "1", "erasure": "0.1"},
//!             {"from": "1", "to": "d", "erasure": "0.2"}],
//!   "source": "s", "dest": "d",
//!   "experiment": {"engine": "occupancy", "buffers": [1, 2, 3],
//!                  "block_size": 10000, "seed": 1}
//! }
//! ```

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{build_chain, exact_throughput, steady_state};
use crate::gfield::{Gf256, Gf65536};
use crate::netmodel::{ErasureNetwork, NetworkError, NetworkSpec, Node};
use crate::occupancy::{self, state_census};
use crate::reduction::{self, enumerate_a, is_in_class_n, layered_partition};
use crate::stats::Estimate;
use crate::{packetized, RunError};

/// Default state budget for exact chain analysis.
pub const CHAIN_MAX_STATES: usize = 100_000;
/// Block size when neither `--epochs` nor `--block-size` is given.
pub const DEFAULT_BLOCK_SIZE: u64 = 10_000;
pub const DEFAULT_CENSUS_EPOCHS: u64 = 1_000_000;
pub const DEFAULT_TOLERANCE: f64 = 0.02;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("invalid experiment setting: {0}")]
    Invalid(String),
}

impl From<serde_json::Error> for ConfigError {
    fn from(e: serde_json::Error) -> Self {
        let message = e.to_string();
        // serde_json appends " at line L column C"; keep only the cause.
        let message = match message.rfind(" at line ") {
            Some(at) => message[..at].to_string(),
            None => message,
        };
        ConfigError::Parse { line: e.line(), column: e.column(), message }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error("sweeps differ: left has buffer sizes {left:?}, right has {right:?}")]
    MismatchedSweep { left: Vec<u32>, right: Vec<u32> },
    #[error("{failed} of {total} sweep points differ by more than the tolerance")]
    ComparisonFailed { failed: usize, total: usize },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// 0 ok, 1 usage, 2 validation, 3 comparison failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) | CliError::Csv(_) => 1,
            CliError::Config(_) | CliError::Run(_) | CliError::MismatchedSweep { .. } => 2,
            CliError::ComparisonFailed { .. } => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Packetized,
    Occupancy,
    Chain,
    Reduced,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Packetized => "packetized",
            Engine::Occupancy => "occupancy",
            Engine::Chain => "chain",
            Engine::Reduced => "reduced",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Optional `"experiment"` object of a config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentBlock {
    pub engine: Option<Engine>,
    pub buffers: Option<Vec<u32>>,
    pub block_size: Option<u64>,
    pub epochs: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub tolerance: Option<f64>,
    pub field_bits: Option<u32>,
}

#[derive(Debug, Deserialize)]
struct ConfigFile {
    #[serde(flatten)]
    network: NetworkSpec,
    #[serde(default)]
    experiment: ExperimentBlock,
}

/// Reads a config file: the validated network plus its experiment block.
pub fn parse_config(path: &Path) -> Result<(ErasureNetwork, ExperimentBlock), ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<(ErasureNetwork, ExperimentBlock), ConfigError> {
    let file: ConfigFile = serde_json::from_str(text)?;
    let network = ErasureNetwork::validate(&file.network)?;
    Ok((network, file.experiment))
}

/// How long each sweep point runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunLength {
    /// Deliver a block of `k` packets and report `k / τ_k`.
    Block(u64),
    /// Average deliveries over this many post-warmup epochs.
    Epochs(u64),
}

impl RunLength {
    fn count(self) -> u64 {
        match self {
            RunLength::Block(k) | RunLength::Epochs(k) => k,
        }
    }
}

/// Fully resolved settings of one sweep.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub config_path: Option<PathBuf>,
    #[serde(skip)]
    pub network: ErasureNetwork,
    pub engine: Engine,
    /// Uniform buffer sizes to sweep; empty keeps the configured buffers.
    pub buffers: Vec<u32>,
    pub length: RunLength,
    pub seed: u64,
    pub field_bits: u32,
    pub tolerance: f64,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub timing: bool,
}

impl ExperimentConfig {
    /// Config plus network as one JSON line, for CSV provenance headers.
    pub fn provenance(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        value["network"] = serde_json::to_value(self.network.to_spec()).expect("network serializes");
        value.to_string()
    }

    /// The sweep points: one network per buffer size.
    pub fn points(&self) -> Vec<(u32, ErasureNetwork)> {
        if self.buffers.is_empty() {
            let b = self.network.buffers();
            let label = if b.windows(2).all(|w| w[0] == w[1]) { b.first().copied().unwrap_or(0) } else { 0 };
            vec![(label, self.network.clone())]
        } else {
            self.buffers.iter().map(|&m| (m, self.network.with_uniform_buffer(m))).collect()
        }
    }
}

// ---------------------------------------------------------------------------
// Command line
// ---------------------------------------------------------------------------

#[derive(Debug, Parser)]
#[command(name = "rlnc", version, about = "Throughput of random linear network coding with finite relay buffers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a network description and print a summary.
    Validate(NetworkArgs),
    /// Print the min-cut capacity.
    Mincut(NetworkArgs),
    /// Run one engine over a buffer-size sweep and write CSV.
    Sweep(SweepArgs),
    /// Run two engines (or read two sweep CSVs) and compare throughputs.
    Compare(CompareArgs),
    /// Count distinct occupancy states visited by a long run.
    Census(CensusArgs),
    /// Print the layer partition, layered-class verdict and tracked subsets.
    Classify(NetworkArgs),
    /// Exact Markov-chain analysis.
    Chain(ChainArgs),
}

#[derive(Debug, Args)]
pub struct NetworkArgs {
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, Args, Clone, Default)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Comma-separated uniform buffer sizes, e.g. `1,2,3`.
    #[arg(long, value_delimiter = ',')]
    pub buffers: Option<Vec<u32>>,
    #[arg(long, conflicts_with = "block_size")]
    pub epochs: Option<u64>,
    #[arg(long)]
    pub block_size: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Field size `2^w` of the packet-level engine (8 or 16).
    #[arg(long)]
    pub field_bits: Option<u32>,
    /// Record wall-clock time per row (makes output non-reproducible).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, value_enum)]
    pub engine: Option<Engine>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Give twice: `--engine packetized --engine occupancy`.
    #[arg(long = "engine", value_enum, num_args = 1, conflicts_with = "csvs")]
    pub engines: Vec<Engine>,
    /// Give twice to compare two existing sweep CSVs instead of running engines.
    #[arg(long = "csv", num_args = 1)]
    pub csvs: Vec<PathBuf>,
    /// Relative gap allowed when the confidence intervals do not overlap.
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CensusArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub buffers: Option<Vec<u32>>,
    #[arg(long)]
    pub epochs: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ChainArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub buffers: Option<Vec<u32>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Merges flags over the config file's experiment block.
pub fn resolve(
    run: &RunArgs,
    engine: Option<Engine>,
    tolerance: Option<f64>,
) -> Result<ExperimentConfig, CliError> {
    let (network, block) = parse_config(&run.config)?;
    let engine = engine.or(block.engine).unwrap_or(Engine::Occupancy);
    let buffers = run.buffers.clone().or(block.buffers).unwrap_or_default();
    if buffers.contains(&0) {
        return Err(ConfigError::Invalid("buffer sizes must be positive".into()).into());
    }
    let length = match (run.epochs, run.block_size) {
        (Some(n), _) => RunLength::Epochs(n),
        (None, Some(k)) => RunLength::Block(k),
        (None, None) => match (block.epochs, block.block_size) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::Invalid("set either epochs or block_size, not both".into()).into())
            }
            (Some(n), None) => RunLength::Epochs(n),
            (None, k) => RunLength::Block(k.unwrap_or(DEFAULT_BLOCK_SIZE)),
        },
    };
    if length.count() == 0 {
        return Err(ConfigError::Invalid("epochs and block size must be positive".into()).into());
    }
    let seed = run
        .seed
        .or(block.seed)
        .ok_or_else(|| CliError::Usage("a seed is required (--seed or experiment.seed)".into()))?;
    let field_bits = run.field_bits.or(block.field_bits).unwrap_or(16);
    if field_bits != 8 && field_bits != 16 {
        return Err(ConfigError::Invalid(format!("field_bits must be 8 or 16, got {field_bits}")).into());
    }
    let tolerance = tolerance.or(block.tolerance).unwrap_or(DEFAULT_TOLERANCE);
    if !(tolerance >= 0.0) {
        return Err(ConfigError::Invalid("tolerance must be non-negative".into()).into());
    }
    Ok(ExperimentConfig {
        config_path: Some(run.config.clone()),
        network,
        engine,
        buffers,
        length,
        seed,
        field_bits,
        tolerance,
        out: run.out.clone().or(block.out),
        timing: run.timing,
    })
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub buffer_size: u32,
    pub engine: Engine,
    pub epochs_or_k: u64,
    pub throughput: f64,
    pub ci95_halfwidth: f64,
    pub seed: u64,
    pub wall_ms: u64,
    pub status: String,
}

/// Runs one engine on one network.
pub fn run_point(
    network: &ErasureNetwork,
    engine: Engine,
    length: RunLength,
    seed: u64,
    field_bits: u32,
) -> Result<Estimate, RunError> {
    let block = |run: occupancy::BlockRun| Estimate { mean: run.throughput, ..run.estimate };
    Ok(match (engine, length) {
        (Engine::Occupancy, RunLength::Block(k)) => block(occupancy::block_throughput(network, k, seed)?),
        (Engine::Occupancy, RunLength::Epochs(n)) => occupancy::monte_carlo_throughput(network, n, seed)?.estimate,
        (Engine::Packetized, RunLength::Block(k)) => block(match field_bits {
            8 => packetized::run_throughput::<Gf256>(network, k, seed)?,
            _ => packetized::run_throughput::<Gf65536>(network, k, seed)?,
        }),
        (Engine::Packetized, RunLength::Epochs(n)) => match field_bits {
            8 => packetized::monte_carlo_throughput::<Gf256>(network, n, seed).estimate,
            _ => packetized::monte_carlo_throughput::<Gf65536>(network, n, seed).estimate,
        },
        (Engine::Reduced, RunLength::Block(k)) => block(reduction::block_throughput(network, k, seed)?),
        (Engine::Reduced, RunLength::Epochs(n)) => reduction::monte_carlo_throughput(network, n, seed)?.estimate,
        (Engine::Chain, _) => {
            let chain = build_chain(network, CHAIN_MAX_STATES)?;
            let pi = steady_state(&chain)?;
            Estimate::exact(exact_throughput(&chain, &pi))
        }
    })
}

fn thread_pool() -> rayon::ThreadPool {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = std::env::var("RLNC_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        builder = builder.num_threads(n.max(1));
    }
    builder.build().expect("thread pool")
}

/// One row per sweep point, in sweep order. Engine failures become rows with
/// zero throughput and the error in `status`.
pub fn run_sweep(config: &ExperimentConfig) -> Vec<SweepRow> {
    let points = config.points();
    let epochs_or_k = match config.engine {
        Engine::Chain => 0,
        _ => config.length.count(),
    };
    thread_pool().install(|| {
        points
            .par_iter()
            .map(|(m, net)| {
                let start = Instant::now();
                let result = run_point(net, config.engine, config.length, config.seed, config.field_bits);
                let wall_ms = if config.timing { start.elapsed().as_millis() as u64 } else { 0 };
                let (est, status) = match result {
                    Ok(e) => (e, "ok".to_string()),
                    Err(RunError::NonTerminating) => (Estimate::exact(0.0), "non-terminating".to_string()),
                    Err(e) => (Estimate { mean: f64::NAN, ci95: f64::NAN, samples: 0 }, e.to_string()),
                };
                SweepRow {
                    buffer_size: *m,
                    engine: config.engine,
                    epochs_or_k,
                    throughput: est.mean,
                    ci95_halfwidth: est.ci95,
                    seed: config.seed,
                    wall_ms,
                    status,
                }
            })
            .collect()
    })
}

/// Writes the provenance comment, header and rows.
pub fn write_sweep_csv<W: Write>(mut out: W, config: &ExperimentConfig, rows: &[SweepRow]) -> Result<(), CliError> {
    writeln!(out, "# config: {}", config.provenance())?;
    writeln!(out, "# seed: {}", config.seed)?;
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRow>, CliError> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

// ---------------------------------------------------------------------------
// Comparison
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonLine {
    pub buffer_size: u32,
    pub engine_a: Engine,
    pub engine_b: Engine,
    pub throughput_a: f64,
    pub throughput_b: f64,
    pub ci95_a: f64,
    pub ci95_b: f64,
    pub abs_gap: f64,
    pub rel_gap: f64,
    pub ci_overlap: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub tolerance: f64,
    pub lines: Vec<ComparisonLine>,
}

impl ComparisonReport {
    pub fn failures(&self) -> usize {
        self.lines.iter().filter(|l| !l.pass).count()
    }

    pub fn passed(&self) -> bool {
        self.failures() == 0
    }

    pub fn human(&self) -> String {
        let mut s = format!(
            "{:>6}  {:>12} {:>10}  {:>12} {:>10}  {:>9} {:>8}  {:>7}  verdict (tolerance {:.2}%)\n",
            "buffer", "engine A", "ci95", "engine B", "ci95", "abs gap", "rel gap", "overlap", self.tolerance * 100.0
        );
        for l in &self.lines {
            s.push_str(&format!(
                "{:>6}  {:>12.6} {:>10.6}  {:>12.6} {:>10.6}  {:>9.6} {:>7.3}%  {:>7}  {}\n",
                l.buffer_size,
                l.throughput_a,
                l.ci95_a,
                l.throughput_b,
                l.ci95_b,
                l.abs_gap,
                l.rel_gap * 100.0,
                if l.ci_overlap { "yes" } else { "no" },
                if l.pass { "PASS" } else { "FAIL" }
            ));
        }
        s
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(out);
        for l in &self.lines {
            w.serialize(l)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A point passes when the relative gap is within `tolerance` or the two
/// finite 95% intervals overlap.
pub fn compare_rows(a: &[SweepRow], b: &[SweepRow], tolerance: f64) -> Result<ComparisonReport, CliError> {
    let sizes = |rows: &[SweepRow]| rows.iter().map(|r| r.buffer_size).collect::<Vec<_>>();
    if sizes(a) != sizes(b) {
        return Err(CliError::MismatchedSweep { left: sizes(a), right: sizes(b) });
    }
    let lines = a
        .iter()
        .zip(b)
        .map(|(x, y)| {
            let ea = Estimate { mean: x.throughput, ci95: x.ci95_halfwidth, samples: 0 };
            let eb = Estimate { mean: y.throughput, ci95: y.ci95_halfwidth, samples: 0 };
            let abs_gap = (x.throughput - y.throughput).abs();
            let scale = x.throughput.abs().max(y.throughput.abs());
            let rel_gap = if scale == 0.0 { 0.0 } else { abs_gap / scale };
            // An interval without information (too few batches) never overlaps.
            let informative = ea.ci95.is_finite() && eb.ci95.is_finite();
            let ci_overlap = informative && ea.overlaps(&eb);
            ComparisonLine {
                buffer_size: x.buffer_size,
                engine_a: x.engine,
                engine_b: y.engine,
                throughput_a: x.throughput,
                throughput_b: y.throughput,
                ci95_a: x.ci95_halfwidth,
                ci95_b: y.ci95_halfwidth,
                abs_gap,
                rel_gap,
                ci_overlap,
                pass: rel_gap <= tolerance || ci_overlap,
            }
        })
        .collect();
    Ok(ComparisonReport { tolerance, lines })
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match out {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn sweep_networks(network: &ErasureNetwork, buffers: &Option<Vec<u32>>) -> Result<Vec<(u32, ErasureNetwork)>, CliError> {
    match buffers {
        Some(b) if b.contains(&0) => Err(ConfigError::Invalid("buffer sizes must be positive".into()).into()),
        Some(b) => Ok(b.iter().map(|&m| (m, network.with_uniform_buffer(m))).collect()),
        None => Ok(vec![(network.buffers().into_iter().max().unwrap_or(0), network.clone())]),
    }
}

fn node_set(network: &ErasureNetwork, s: u32) -> String {
    let ids: Vec<&str> =
        (0..network.relay_count()).filter(|i| s >> i & 1 == 1).map(|i| network.node_id(Node::Relay(i))).collect();
    format!("{{{}}}", ids.join(","))
}

/// Runs a parsed command; the caller maps errors to exit codes.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate(a) => {
            let (net, _) = parse_config(&a.config)?;
            println!(
                "valid: {} relays, {} links, buffers {:?}, min-cut {}",
                net.relay_count(),
                net.edges().len(),
                net.buffers(),
                net.min_cut_capacity()
            );
        }
        Command::Mincut(a) => {
            let (net, _) = parse_config(&a.config)?;
            let c = net.min_cut_capacity();
            println!("{} ({})", c, net.min_cut_value());
        }
        Command::Sweep(a) => {
            let config = resolve(&a.run, a.engine, None)?;
            let rows = run_sweep(&config);
            write_sweep_csv(sink(&config.out)?, &config, &rows)?;
        }
        Command::Compare(a) => {
            let (report, out) = if a.csvs.is_empty() {
                let [ea, eb] = a.engines[..] else {
                    return Err(CliError::Usage("compare needs exactly two --engine values".into()));
                };
                let ca = resolve(&a.run, Some(ea), a.tolerance)?;
                let mut cb = ca.clone();
                cb.engine = eb;
                (compare_rows(&run_sweep(&ca), &run_sweep(&cb), ca.tolerance)?, ca.out)
            } else {
                let [pa, pb] = &a.csvs[..] else {
                    return Err(CliError::Usage("compare needs exactly two --csv values".into()));
                };
                let (_, block) = parse_config(&a.run.config)?;
                let tolerance = a.tolerance.or(block.tolerance).unwrap_or(DEFAULT_TOLERANCE);
                if !(tolerance >= 0.0) {
                    return Err(ConfigError::Invalid("tolerance must be non-negative".into()).into());
                }
                (compare_rows(&read_sweep_csv(pa)?, &read_sweep_csv(pb)?, tolerance)?, a.run.out.clone())
            };
            print!("{}", report.human());
            if let Some(path) = &out {
                report.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))?;
            }
            if !report.passed() {
                return Err(CliError::ComparisonFailed { failed: report.failures(), total: report.lines.len() });
            }
        }
        Command::Census(a) => {
            let (net, block) = parse_config(&a.config)?;
            let seed = a.seed.or(block.seed).ok_or_else(|| CliError::Usage("a seed is required".into()))?;
            let epochs = a.epochs.unwrap_or(DEFAULT_CENSUS_EPOCHS);
            let buffers = a.buffers.or(block.buffers);
            let mut out = sink(&a.out)?;
            writeln!(out, "# census of {} with seed {seed}", a.config.display())?;
            writeln!(out, "buffer_size,census_states,transient_only,chain_reachable,chain_recurrent,epochs,seed")?;
            for (m, net) in sweep_networks(&net, &buffers)? {
                let census = state_census(&net, epochs, seed).map_err(RunError::from)?;
                let (reach, rec) = match build_chain(&net, CHAIN_MAX_STATES) {
                    Ok(c) => (c.reachable_count().to_string(), c.recurrent_count().to_string()),
                    Err(_) => (String::new(), String::new()),
                };
                writeln!(out, "{m},{},{},{reach},{rec},{epochs},{seed}", census.visited, census.transient_only)?;
            }
        }
        Command::Classify(a) => {
            let (net, _) = parse_config(&a.config)?;
            let part = layered_partition(&net);
            for k in 1..=part.depth() {
                let mask = part.layer(k).iter().map(|&i| 1u32 << i).sum();
                println!("H_{k} = {}", node_set(&net, mask));
            }
            println!("layered class: {}", if is_in_class_n(&net) { "yes" } else { "no" });
            let family = enumerate_a(&net).map_err(RunError::from)?;
            println!("tracked subsets: {}", family.len());
            for &s in family.subsets() {
                println!("  {}", node_set(&net, s));
            }
        }
        Command::Chain(a) => {
            let (net, block) = parse_config(&a.config)?;
            let mut out = sink(&a.out)?;
            writeln!(out, "buffer_size,reachable,recurrent,exact_throughput")?;
            for (m, net) in sweep_networks(&net, &a.buffers.or(block.buffers))? {
                let chain = build_chain(&net, CHAIN_MAX_STATES).map_err(RunError::from)?;
                let pi = steady_state(&chain).map_err(RunError::from)?;
                writeln!(
                    out,
                    "{m},{},{},{:.12}",
                    chain.reachable_count(),
                    chain.recurrent_count(),
                    exact_throughput(&chain, &pi)
                )?;
            }
        }
    }
    Ok(())
}

/// Parses `args`, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
