//! Command implementations behind the `cdma-paging` binary.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use cdma_paging::config::{parse_grid, parse_populations, RunConfig};
use cdma_paging::erlang::{metrics, QueueParams};
use cdma_paging::markov::{absorption_probabilities, build_paging_chain, expected_steps};
use cdma_paging::search::{build_priority, location_distribution, CarrierSystem};
use cdma_paging::sim::{self, SimMode};
use cdma_paging::sweep::sweep;
use cdma_paging::{Error, Interpretation, Scenario};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INTERNAL,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) => Self::internal(e.to_string()),
            _ => Self::usage(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "cdma-paging",
    version,
    about = "Sequential vs. concurrent paging on multi-carrier CDMA"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Erlang C delay probability and wait/sojourn times for one queue.
    Erlang(ErlangArgs),
    /// Expected paging time of a descending-priority search.
    Markov(MarkovArgs),
    /// Sweep arrival rates and write analytic (and simulated) rows as CSV.
    Compare(CompareArgs),
    /// Simulate one configuration at a single arrival rate.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct ErlangArgs {
    /// Offered load A in erlangs.
    #[arg(long)]
    pub load: f64,
    /// Number of channels C.
    #[arg(long)]
    pub channels: u32,
    /// Service rate per channel.
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
}

#[derive(Debug, Args)]
pub struct MarkovArgs {
    /// Carrier populations, comma separated (e.g. `5,3,2`).
    #[arg(long = "pop")]
    pub pop: String,
}

#[derive(Debug, Args, Clone)]
pub struct RunOverrides {
    /// Configuration file (TOML, or JSON when it starts with `{`).
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<SimMode>,
    #[arg(long, value_parser = parse_interpretation)]
    pub interpretation: Option<Interpretation>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Arrivals per simulated cell.
    #[arg(long)]
    pub horizon: Option<u64>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub run: RunOverrides,
    /// Arrival rates: `0.5,1,2` or `start:stop:step`. Overrides the config.
    #[arg(long)]
    pub lambda_grid: Option<String>,
    /// Add simulated rows next to the analytic ones.
    #[arg(long)]
    pub simulate: bool,
    /// Output CSV path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub run: RunOverrides,
    /// Arrival rate; defaults to the first grid point of the config.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Scenario; defaults to the first scenario of the config.
    #[arg(long, value_parser = parse_scenario)]
    pub scenario: Option<Scenario>,
}

fn parse_mode(s: &str) -> Result<SimMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_interpretation(s: &str) -> Result<Interpretation, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Provenance written next to every output file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub config_digest: String,
    pub tool_version: String,
    pub seed: u64,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new<T: Serialize>(resolved: &T, seed: u64) -> CliResult<Self> {
        let canonical =
            serde_json::to_vec(resolved).map_err(|e| CliError::internal(e.to_string()))?;
        Ok(Self {
            config_digest: hex::encode(Sha256::digest(&canonical)),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ErlangReport {
    pub load: f64,
    pub channels: u32,
    pub mu: f64,
    pub p_delay: f64,
    pub awa: f64,
    pub awd: f64,
    pub total_time: f64,
}

pub fn erlang_report(load: f64, channels: u32, mu: f64) -> CliResult<ErlangReport> {
    let params = QueueParams::new(load, channels, mu)?;
    let m = metrics(&params)?;
    Ok(ErlangReport {
        load,
        channels,
        mu,
        p_delay: m.p_delay,
        awa: m.avg_wait_all,
        awd: m.avg_wait_delayed,
        total_time: m.time_in_system,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MarkovReport {
    pub populations: Vec<u64>,
    /// Carrier ids in probe order.
    pub order: Vec<usize>,
    /// Success probability per search position (positive-population carriers only).
    pub position_probabilities: Vec<f64>,
    /// Probability of being absorbed at each position, from the start state.
    pub absorption: Vec<f64>,
    /// Expected paging time in unit slots (= expected channel-pages per user).
    pub expected_steps: f64,
}

pub fn markov_report(populations: &[u64]) -> CliResult<MarkovReport> {
    let system = CarrierSystem::from_populations(populations)?;
    let dist = location_distribution(&system)?;
    let table = build_priority(&dist);
    let search = dist.descending_search()?;
    let chain = build_paging_chain(&search)?;
    let steps = expected_steps(&chain)?;
    let absorption = absorption_probabilities(&chain)?;
    Ok(MarkovReport {
        populations: populations.to_vec(),
        order: table.order().iter().map(|id| id.0).collect(),
        position_probabilities: search.probs().to_vec(),
        absorption: absorption.row(0).iter().copied().collect(),
        expected_steps: steps[0],
    })
}

fn resolve(run: &RunOverrides) -> CliResult<RunConfig> {
    let mut cfg = RunConfig::load(&run.config)?;
    if let Some(mode) = run.mode {
        cfg.mode = mode;
    }
    if let Some(i) = run.interpretation {
        cfg.interpretation = i;
    }
    if let Some(seed) = run.seed {
        cfg.seed = seed;
    }
    if let Some(h) = run.horizon {
        cfg.horizon = h;
        if h < 2 || h <= cfg.warmup() {
            return Err(CliError::usage(format!("--horizon {h} is too small")));
        }
    }
    Ok(cfg)
}

#[derive(Serialize)]
struct CompareInputs<'a> {
    command: &'static str,
    config: &'a RunConfig,
    simulate: bool,
}

/// Writes `bytes` to `path` through a temporary file in the same directory,
/// so a failed run never leaves a partial file behind.
fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| CliError::internal(format!("cannot write in {}: {e}", dir.display())))?;
    tmp.write_all(bytes)
        .map_err(|e| CliError::internal(e.to_string()))?;
    tmp.persist(path)
        .map_err(|e| CliError::internal(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Runs `compare` and returns the CSV bytes and manifest.
pub fn compare_csv(args: &CompareArgs) -> CliResult<(Vec<u8>, RunManifest)> {
    let mut cfg = resolve(&args.run)?;
    if let Some(grid) = &args.lambda_grid {
        cfg.lambda_grid =
            parse_grid(grid).map_err(|e| CliError::usage(format!("--lambda-grid: {e}")))?;
    }
    if cfg.lambda_grid.is_empty() {
        return Err(CliError::usage(
            "no arrival grid: set `lambda_grid` in the config or pass --lambda-grid",
        ));
    }
    let manifest = RunManifest::new(
        &CompareInputs {
            command: "compare",
            config: &cfg,
            simulate: args.simulate,
        },
        cfg.seed,
    )?;
    let base = cfg.sim_config(cfg.scenarios[0], cfg.lambda_grid[0]);
    let result = sweep(&base, &cfg.lambda_grid, &cfg.scenarios, args.simulate)?;
    let mut buf = Vec::new();
    result.write_csv(&mut buf)?;
    Ok((buf, manifest))
}

pub fn cmd_compare(args: &CompareArgs) -> CliResult<()> {
    let (csv, manifest) = compare_csv(args)?;
    let manifest_json =
        serde_json::to_string_pretty(&manifest).map_err(|e| CliError::internal(e.to_string()))?;
    match &args.out {
        Some(path) => {
            write_atomic(path, &csv)?;
            if let Err(e) = write_atomic(&manifest_path(path), manifest_json.as_bytes()) {
                let _ = fs::remove_file(path);
                return Err(e);
            }
        }
        None => {
            std::io::stdout()
                .write_all(&csv)
                .map_err(|e| CliError::internal(e.to_string()))?;
            eprintln!("{}", serde_json::to_string(&manifest).unwrap_or_default());
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SimulateReport {
    manifest: RunManifest,
    lambda: f64,
    scenario: Scenario,
    mode: SimMode,
    interpretation: Interpretation,
    stats: sim::SimStats,
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<String> {
    let cfg = resolve(&args.run)?;
    let lambda = match (args.lambda, cfg.lambda_grid.first()) {
        (Some(l), _) => l,
        (None, Some(&l)) => l,
        (None, None) => {
            return Err(CliError::usage(
                "no arrival rate: pass --lambda or set `lambda_grid` in the config",
            ))
        }
    };
    let scenario = args.scenario.unwrap_or(cfg.scenarios[0]);
    let sim_cfg = cfg.sim_config(scenario, lambda);
    let stats = sim::run(&sim_cfg)?;
    #[derive(Serialize)]
    struct Inputs<'a> {
        command: &'static str,
        config: &'a RunConfig,
        lambda: f64,
        scenario: Scenario,
    }
    let manifest = RunManifest::new(
        &Inputs {
            command: "simulate",
            config: &cfg,
            lambda,
            scenario,
        },
        cfg.seed,
    )?;
    serde_json::to_string_pretty(&SimulateReport {
        manifest,
        lambda,
        scenario,
        mode: cfg.mode,
        interpretation: cfg.interpretation,
        stats,
    })
    .map_err(|e| CliError::internal(e.to_string()))
}

fn to_json<T: Serialize>(v: &T) -> CliResult<String> {
    serde_json::to_string_pretty(v).map_err(|e| CliError::internal(e.to_string()))
}

/// Dispatches one parsed command, printing its result.
pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Erlang(a) => {
            println!("{}", to_json(&erlang_report(a.load, a.channels, a.mu)?)?);
        }
        Command::Markov(a) => {
            let pops =
                parse_populations(&a.pop).map_err(|e| CliError::usage(format!("--pop: {e}")))?;
            println!("{}", to_json(&markov_report(&pops)?)?);
        }
        Command::Compare(a) => cmd_compare(&a)?,
        Command::Simulate(a) => println!("{}", cmd_simulate(&a)?),
    }
    Ok(())
}
