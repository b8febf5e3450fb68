//! `qbm` command-line driver: configuration, subcommands, sweeps and run
//! manifests over the `qbm-core` library.

pub mod commands;
pub mod config;
pub mod manifest;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use thiserror::Error;

use config::{parse_sweep, set_key, set_value, RunConfig};
use manifest::{OutputDir, RunManifest, SweepPoint};

/// Environment variable naming the default output root.
pub const OUT_DIR_ENV: &str = "QBM_OUT_DIR";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl From<qbm_core::Error> for CliError {
    /// Parameter and step-size rejections are configuration problems; a
    /// solver that fails on an accepted configuration is a numerical failure.
    fn from(e: qbm_core::Error) -> Self {
        use qbm_core::Error as E;
        match e {
            E::InvalidParameter { .. }
            | E::Argument(_)
            | E::Domain(_)
            | E::GridResolution { .. }
            | E::StepSize { .. }
            | E::StepTooSmall { .. } => CliError::Validation(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Synthesize bath-force realizations; write the target spectrum and a periodogram.
    Noise,
    /// Run a Langevin ensemble and write moments, histograms and spectra.
    Langevin,
    /// Solve the cutoff equation over a sweep of theta = hbar gamma / T.
    Cutoff,
    /// Tabulate the density-mode dispersion q^2(omega), both branches.
    Dispersion,
    /// Integrate the Klein-Kramers equation on a phase-space grid.
    Kramers,
    /// Integrate the Smoluchowski equation on a position grid.
    Smoluchowski,
    /// Evaluate T*, D and T* D for a point charge in SI units.
    Constants,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Noise => "noise",
            Command::Langevin => "langevin",
            Command::Cutoff => "cutoff",
            Command::Dispersion => "dispersion",
            Command::Kramers => "kramers",
            Command::Smoluchowski => "smoluchowski",
            Command::Constants => "constants",
        }
    }

    fn run(self, cfg: &RunConfig, out: &mut OutputDir) -> Result<commands::Report, CliError> {
        match self {
            Command::Noise => commands::noise(cfg, out),
            Command::Langevin => commands::langevin(cfg, out),
            Command::Cutoff => commands::cutoff(cfg, out),
            Command::Dispersion => commands::dispersion(cfg, out),
            Command::Kramers => commands::kramers(cfg, out),
            Command::Smoluchowski => commands::smoluchowski(cfg, out),
            Command::Constants => commands::constants_cmd(cfg, out),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qbm", version, about = "Brownian motion in a quantum heat bath")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration; omitted fields take their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (default: $QBM_OUT_DIR/<command>, else qbm-out/<command>).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for ensembles and sweeps.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Override one config field, e.g. `--set params.hbar=0.5`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub set: Vec<String>,
    /// Run once per value: KEY=start:stop:steps[:log].
    #[arg(long, global = true)]
    pub sweep: Option<String>,
    /// Print the effective configuration as TOML and exit.
    #[arg(long, global = true)]
    pub print_config: bool,
}

/// File config, then `--set` overrides, then `--seed`: flags win.
pub fn effective_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            RunConfig::from_toml(&text)?
        }
        None => RunConfig::default(),
    };
    for assignment in &cli.set {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::Validation(format!("--set {assignment}: expected KEY=VALUE")))?;
        cfg = set_key(&cfg, key.trim(), value.trim())?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn output_root(cli: &Cli) -> PathBuf {
    match (&cli.out, std::env::var_os(OUT_DIR_ENV)) {
        (Some(dir), _) => dir.clone(),
        (None, Some(root)) => PathBuf::from(root).join(cli.command.name()),
        (None, None) => PathBuf::from("qbm-out").join(cli.command.name()),
    }
}

/// Validates, runs one command into `dir` and writes its manifest.
pub fn run_once(
    command: Command,
    cfg: &RunConfig,
    dir: &Path,
    sweep: Option<SweepPoint>,
) -> Result<RunManifest, CliError> {
    cfg.validate()?;
    let start = Instant::now();
    let mut out = OutputDir::create(dir)?;
    let report = command.run(cfg, &mut out)?;
    out.finish(RunManifest {
        tool: "qbm".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.name().into(),
        config: cfg.clone(),
        seed: cfg.seed,
        sweep,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        diagnostics: report.diagnostics,
        checks: report.checks,
        warnings: report.warnings,
        solver: report.solver,
        files: Vec::new(),
    })
}

/// Sweep values keep integer fields integral.
fn sweep_value(cfg: &RunConfig, key: &str, value: f64) -> toml::Value {
    let current = toml::Table::try_from(cfg).ok().and_then(|root| {
        key.split('.')
            .try_fold(toml::Value::Table(root), |v, part| v.get(part).cloned())
    });
    match current {
        Some(toml::Value::Integer(_)) => toml::Value::Integer(value.round() as i64),
        _ => toml::Value::Float(value),
    }
}

fn summarize(dir: &Path, m: &RunManifest) {
    println!("{}: {} files in {}", m.command, m.files.len(), dir.display());
    for c in &m.checks {
        let verdict = if c.passed { "ok" } else { "FAILED" };
        println!("  check {}: {:e} (limit {:e}) {verdict}", c.name, c.value, c.limit);
    }
    for w in &m.warnings {
        println!("  warning: {w}");
    }
}

/// Runs the parsed command line and returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    match try_execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn try_execute(cli: &Cli) -> Result<i32, CliError> {
    let cfg = effective_config(cli)?;
    if cli.print_config {
        print!("{}", cfg.to_toml());
        return Ok(0);
    }
    let pool = {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cli.threads {
            if n == 0 {
                return Err(CliError::Validation("--threads: must be >= 1".into()));
            }
            builder = builder.num_threads(n);
        }
        builder
            .build()
            .map_err(|e| CliError::Validation(format!("--threads: {e}")))?
    };
    let root = output_root(cli);
    pool.install(|| match &cli.sweep {
        None => {
            let m = run_once(cli.command, &cfg, &root, None)?;
            summarize(&root, &m);
            Ok(if m.passed() { 0 } else { 2 })
        }
        Some(spec) => {
            let sweep = parse_sweep(spec)?;
            // Validate every point before running any of them.
            let points = sweep
                .values
                .iter()
                .map(|&v| {
                    let c = set_value(&cfg, &sweep.key, sweep_value(&cfg, &sweep.key, v))?;
                    c.validate()?;
                    Ok(c)
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            let results: Vec<(PathBuf, Result<RunManifest, CliError>)> = points
                .par_iter()
                .enumerate()
                .map(|(i, c)| {
                    let dir = root.join(format!("point_{i:03}"));
                    let point = SweepPoint {
                        key: sweep.key.clone(),
                        index: i,
                        value: sweep.values[i],
                    };
                    let r = run_once(cli.command, c, &dir, Some(point));
                    (dir, r)
                })
                .collect();
            let mut index = qbm_core::io::CsvTable::new(["index", "value", "exit_code"]);
            index.meta("key", &sweep.key);
            let mut code = 0;
            for (i, (dir, r)) in results.iter().enumerate() {
                let c = match r {
                    Ok(m) => {
                        summarize(dir, m);
                        if m.passed() { 0 } else { 2 }
                    }
                    Err(e) => {
                        eprintln!("error at {} = {}: {e}", sweep.key, sweep.values[i]);
                        e.exit_code()
                    }
                };
                code = code.max(c);
                index.push(vec![i as f64, sweep.values[i], c as f64]);
            }
            let mut out = OutputDir::create(&root)?;
            out.write_table("sweep.csv", &index)?;
            Ok(code)
        }
    })
}
