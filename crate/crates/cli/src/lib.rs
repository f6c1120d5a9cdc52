//! Command implementations behind the `hsps` binary. Each command loads
//! the resolved configuration, writes its CSV/JSON outputs into the run
//! directory and finishes with a manifest.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use hsps_core::config::RunConfig;
use hsps_core::error::{Error, Result};
use hsps_core::io::{self, RunManifest};

mod commands;

pub use commands::heralding::SweepKind;

#[derive(Parser, Debug)]
#[command(
    name = "hsps",
    version,
    about = "Model, optimize and fit a time-multiplexed SPDC heralded single-photon source"
)]
pub struct Cli {
    /// Configuration file path, or "paper" for the bundled preset.
    #[arg(long, global = true, default_value = "paper")]
    pub config: String,

    /// Output directory (overrides io.out_dir).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Random seed (overrides run.seed).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads (overrides run.threads; 0 = all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Override one config key, e.g. --set grid.points=256 (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Joint spectral amplitude: JSI, pump envelope and |Phi| maps.
    Jsa,
    /// Heralding-efficiency sweeps.
    Heralding {
        #[arg(long, value_enum, default_value_t = SweepKind::Wavelength)]
        sweep: SweepKind,
        /// Signal wavelength range (m) for the wavelength sweep.
        #[arg(long, default_value_t = 900e-9)]
        lambda_min: f64,
        #[arg(long, default_value_t = 950e-9)]
        lambda_max: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
        /// Focal-parameter range for the focal / max-jsi sweeps.
        #[arg(long, default_value_t = 0.01)]
        xi_min: f64,
        #[arg(long, default_value_t = 10.0)]
        xi_max: f64,
        #[arg(long, default_value_t = 41)]
        xi_points: usize,
    },
    /// Schmidt purity, spectral filtering and the filter-width sweep.
    Purity,
    /// Poled-crystal domain engineering.
    Poling {
        #[arg(value_enum)]
        action: commands::poling::PolingAction,
        /// Structure file for `evaluate`.
        #[arg(long)]
        structure: Option<PathBuf>,
    },
    /// Time-multiplexing model, simulation and fits.
    Multiplex {
        #[arg(value_enum)]
        action: commands::multiplex::MultiplexAction,
        /// Input CSV for `fit` (x, y[, sigma]).
        #[arg(long)]
        data: Option<PathBuf>,
        /// Fit kind for `fit`.
        #[arg(long, value_enum, default_value_t = commands::multiplex::FitKind::Multiplexed)]
        fit_kind: commands::multiplex::FitKind,
    },
}

/// Resolved execution context shared by the commands.
pub struct Context {
    pub config: RunConfig,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl Context {
    fn manifest(&self, command: &str) -> RunManifest {
        RunManifest::begin(command, self.config.to_canonical_toml(), self.seed)
    }
}

/// Load the configuration, apply `--set` overrides and flag overrides.
pub fn resolve_context(cli: &Cli) -> Result<Context> {
    let base = if cli.config == "paper" {
        hsps_core::config::PAPER_PRESET_TOML.to_string()
    } else {
        std::fs::read_to_string(&cli.config)
            .map_err(|e| Error::Config(format!("cannot read config '{}': {e}", cli.config)))?
    };
    let text = apply_overrides(&base, &cli.overrides)?;
    let mut config = RunConfig::from_toml_str(&text)?;
    if let Some(seed) = cli.seed {
        config.run.seed = seed;
    }
    if let Some(threads) = cli.threads {
        config.run.threads = threads;
    }
    let out_dir = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&config.io.out_dir));
    Ok(Context {
        seed: config.run.seed,
        out_dir,
        config,
    })
}

/// Parse `key.path=value` overrides into the TOML tree before
/// deserialization; flags win over the file.
pub fn apply_overrides(base: &str, overrides: &[String]) -> Result<String> {
    if overrides.is_empty() {
        return Ok(base.to_string());
    }
    let mut doc: toml::Table =
        toml::from_str(base).map_err(|e| Error::Config(format!("parse: {e}")))?;
    for entry in overrides {
        let (key, value) = entry
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got '{entry}'")))?;
        let parsed: toml::Value = toml::from_str::<toml::Table>(&format!("v = {value}"))
            .map(|mut t| t.remove("v").unwrap())
            .or_else(|_| {
                toml::from_str::<toml::Table>(&format!("v = \"{value}\""))
                    .map(|mut t| t.remove("v").unwrap())
            })
            .map_err(|e| Error::Config(format!("--set {entry}: {e}")))?;
        let mut node = &mut doc;
        let parts: Vec<&str> = key.split('.').collect();
        for part in &parts[..parts.len() - 1] {
            node = node
                .entry(part.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                .as_table_mut()
                .ok_or_else(|| Error::Config(format!("--set {entry}: '{part}' is not a table")))?;
        }
        node.insert(parts[parts.len() - 1].to_string(), parsed);
    }
    toml::to_string_pretty(&doc).map_err(|e| Error::Config(format!("serialize: {e}")))
}

/// Run one parsed command line to completion; returns the written files.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let ctx = resolve_context(cli)?;
    let threads = ctx.config.run.threads;
    if threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| dispatch(cli, &ctx))
    } else {
        dispatch(cli, &ctx)
    }
}

fn dispatch(cli: &Cli, ctx: &Context) -> Result<Vec<PathBuf>> {
    match &cli.command {
        Command::Jsa => commands::jsa::run(ctx),
        Command::Heralding {
            sweep,
            lambda_min,
            lambda_max,
            points,
            xi_min,
            xi_max,
            xi_points,
        } => commands::heralding::run(
            ctx,
            *sweep,
            (*lambda_min, *lambda_max, *points),
            (*xi_min, *xi_max, *xi_points),
        ),
        Command::Purity => commands::purity::run(ctx),
        Command::Poling { action, structure } => {
            commands::poling::run(ctx, *action, structure.as_deref())
        }
        Command::Multiplex {
            action,
            data,
            fit_kind,
        } => commands::multiplex::run(ctx, *action, data.as_deref(), *fit_kind),
    }
}

pub(crate) fn finish(
    manifest: RunManifest,
    out_dir: &Path,
    files: Vec<PathBuf>,
) -> Result<Vec<PathBuf>> {
    let mut manifest = manifest;
    for f in &files {
        manifest.record(f);
    }
    let manifest_path = manifest.finish(out_dir)?;
    let mut all = files;
    all.push(manifest_path);
    Ok(all)
}

/// Shared helper: grid of log-spaced values.
pub(crate) fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (llo + (lhi - llo) * i as f64 / (n - 1).max(1) as f64).exp())
        .collect()
}

pub(crate) use io::{write_json, write_matrix_csv, write_table_csv};
