//! `dispersionlab` command-line front end.

mod commands;
mod error;
mod output;
mod spec_file;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use commands::{execute, parse_sim_config, Grid, Resolved};
use error::CliError;
use output::{RunManifest, Units};
use spec_file::load_spec;

#[derive(Parser)]
#[command(name = "dispersionlab", version, about = "Second-order coding-rate toolkit for channels with state")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Capacity, optimal parameters and stationarity residual of a channel spec.
    GpCapacity(CapacityArgs),
    /// Normal-approximation and i.i.d.-coding curves for a channel spec.
    GpSecondOrder(SecondOrderArgs),
    /// Normal-approximation curve for dirty paper coding at power P.
    DpcCurve(DpcArgs),
    /// Run one Monte Carlo experiment described by a JSON config.
    Simulate(SimulateArgs),
    /// Re-run the configuration recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct SpecArgs {
    /// Channel spec JSON file, or `builtin:stuck-at`.
    #[arg(long)]
    spec: String,
    /// Evaluate the spec's aux block instead of optimizing.
    #[arg(long)]
    fixed: bool,
    /// Auxiliary alphabet size for the optimizer.
    #[arg(long)]
    aux_size: Option<usize>,
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct CommonOut {
    #[arg(long, value_enum, default_value_t = Units::Bits)]
    units: Units,
    /// Output file; a `<out>.manifest.json` is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long, default_value_t = 10)]
    n_min: usize,
    #[arg(long, default_value_t = 1000)]
    n_max: usize,
    #[arg(long, default_value_t = 10)]
    n_step: usize,
}

impl GridArgs {
    fn grid(&self) -> Grid {
        Grid { n_min: self.n_min, n_max: self.n_max, n_step: self.n_step }
    }
}

#[derive(Args)]
struct CapacityArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[command(flatten)]
    out: CommonOut,
}

#[derive(Args)]
struct SecondOrderArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long)]
    eps: f64,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    out: CommonOut,
}

#[derive(Args)]
struct DpcArgs {
    /// Transmit power P.
    #[arg(long = "power", short = 'P')]
    power: f64,
    #[arg(long)]
    eps: f64,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    out: CommonOut,
}

#[derive(Args)]
struct SimulateArgs {
    /// Experiment config JSON (field `operation` selects the estimator).
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    shards: usize,
    #[command(flatten)]
    out: CommonOut,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Defaults to the output path recorded in the manifest.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("DISPERSIONLAB_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("DISPERSIONLAB_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Ingestion(format!("{}: {e}", path.display())))
}

fn resolve(cmd: &Cmd) -> Result<(Resolved, Option<PathBuf>), CliError> {
    Ok(match cmd {
        Cmd::GpCapacity(a) => (
            Resolved::GpCapacity {
                spec_source: a.spec.spec.clone(),
                spec: load_spec(&a.spec.spec)?,
                fixed: a.spec.fixed,
                aux_size: a.spec.aux_size,
                restarts: a.spec.restarts,
                seed: a.spec.seed,
                units: a.out.units,
            },
            a.out.out.clone(),
        ),
        Cmd::GpSecondOrder(a) => (
            Resolved::GpSecondOrder {
                spec_source: a.spec.spec.clone(),
                spec: load_spec(&a.spec.spec)?,
                fixed: a.spec.fixed,
                aux_size: a.spec.aux_size,
                restarts: a.spec.restarts,
                seed: a.spec.seed,
                eps: a.eps,
                grid: a.grid.grid(),
                units: a.out.units,
            },
            a.out.out.clone(),
        ),
        Cmd::DpcCurve(a) => (
            Resolved::DpcCurve { power: a.power, eps: a.eps, grid: a.grid.grid(), units: a.out.units },
            a.out.out.clone(),
        ),
        Cmd::Simulate(a) => {
            let base = a.config.parent().unwrap_or(Path::new(".")).to_path_buf();
            let op = parse_sim_config(&read_text(&a.config)?)?.inline_specs(&base)?;
            (Resolved::Simulate { op, seed: a.seed, shards: a.shards, units: a.out.units }, a.out.out.clone())
        }
        Cmd::Replay(a) => {
            let m: RunManifest = serde_json::from_str(&read_text(&a.manifest)?)
                .map_err(|e| CliError::Ingestion(format!("{}: {e}", a.manifest.display())))?;
            let out = a.out.clone().unwrap_or_else(|| PathBuf::from(&m.output));
            (m.config, Some(out))
        }
    })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let (cfg, out) = resolve(&cli.cmd)?;
    let start = Instant::now();
    let artifact = execute(&cfg)?;
    let duration = start.elapsed().as_secs_f64();
    match out {
        Some(path) => {
            write(&path, &artifact.payload)?;
            let manifest = RunManifest {
                command: cfg.name().to_string(),
                toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
                seed: cfg.seed(),
                output: path.to_string_lossy().into_owned(),
                duration_secs: duration,
                config: cfg,
            };
            let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Output(e.to_string()))?;
            let mut mpath = path.into_os_string();
            mpath.push(".manifest.json");
            write(Path::new(&mpath), &(text + "\n"))?;
            if let Some(s) = artifact.summary {
                print!("{s}");
            }
        }
        None => print!("{}", artifact.summary.unwrap_or(artifact.payload)),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dispersionlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
