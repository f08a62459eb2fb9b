//! Command-line front end.
//!
//! Exit codes: 0 success, 1 configuration or I/O error, 2 divergence of a
//! tamed or implicit run, 3 implicit solver failure.

mod config;
mod output;

pub use config::RunConfig;
pub use output::stats_header;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::config::SchemeKind;
use crate::engine::simulate;
use crate::error::{Error, Result};
use crate::harness::{
    blowup_frequency, count_modes, density_figure, strong_rate, timing_scan, BlowupStudy,
    DensityFigure,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_DIVERGED: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "mvsde", version, about = "Particle simulation of McKean-Vlasov SDEs")]
pub struct Cli {
    /// JSON configuration file; defaults apply to anything it omits.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed, overriding every seed in the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads. Results do not depend on this.
    #[arg(long, global = true, env = "MVSDE_THREADS")]
    pub threads: Option<usize>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Run one simulation and write stats.csv.
    Simulate,
    /// Strong-rate study against a fine proxy.
    Converge,
    /// Count blow-ups over repeated runs.
    Blowup,
    /// Time the explicit and implicit schemes over d and N.
    Timing,
    /// Kernel density estimates of the terminal law.
    Density,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Diverged { .. } => EXIT_DIVERGED,
        Error::NonConvergence { .. } => EXIT_SOLVER,
        _ => EXIT_CONFIG,
    }
}

pub fn run_from_env() -> i32 {
    run(std::env::args_os())
}

/// Parse `args` (including the program name) and execute.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cli: &Cli) -> Result<i32> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let cfg = cfg.effective(cli.seed);
    cfg.model.validate()?;
    std::fs::create_dir_all(&cli.out)?;

    let pool = match cli.threads {
        Some(0) => return Err(Error::config("--threads must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    }
    .map_err(|e| Error::config(format!("cannot start thread pool: {e}")))?;

    output::write_json(&cli.out.join("config.json"), &cfg)?;
    pool.install(|| match cli.command {
        Command::Simulate => cmd_simulate(&cfg, &cli.out),
        Command::Converge => cmd_converge(&cfg, &cli.out),
        Command::Blowup => cmd_blowup(&cfg, &cli.out),
        Command::Timing => cmd_timing(&cfg, &cli.out),
        Command::Density => cmd_density(&cfg, &cli.out),
    })
}

fn cmd_simulate(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let model = cfg.model.build()?;
    let res = simulate(model.as_ref(), &cfg.simulate)?;
    output::write_stats(&out.join("stats.csv"), &res)?;
    if cfg.simulate.snapshot_stride > 0 {
        output::write_snapshots(&out.join("snapshots.csv"), &res)?;
    }
    output::write_json(
        &out.join("summary.json"),
        &output::SimulationSummary::new(model.name(), &res),
    )?;
    if res.diverged && res.scheme.kind != SchemeKind::StandardEuler {
        eprintln!(
            "error: {} run diverged at step {}",
            res.scheme.kind,
            res.first_divergence_step.unwrap_or(0)
        );
        return Ok(EXIT_DIVERGED);
    }
    Ok(EXIT_OK)
}

fn cmd_converge(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let model = cfg.model.build()?;
    let study = strong_rate(model.as_ref(), &cfg.converge)?;
    output::write_convergence(&out.join("convergence.csv"), &study)?;
    output::write_json(&out.join("convergence.json"), &study)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct BlowupSummary<'a> {
    #[serde(flatten)]
    study: &'a BlowupStudy,
    monotone: bool,
}

fn cmd_blowup(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let model = cfg.model.build()?;
    let study = blowup_frequency(model.as_ref(), &cfg.blowup)?;
    output::write_blowup(&out.join("blowup.csv"), &out.join("blowup_runs.csv"), &study)?;
    output::write_json(
        &out.join("blowup.json"),
        &BlowupSummary {
            study: &study,
            monotone: study.is_monotone(),
        },
    )?;
    Ok(EXIT_OK)
}

fn cmd_timing(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let family = cfg.model.clone();
    let table = timing_scan(|d| family.with_dim(d)?.build(), &cfg.timing)?;
    output::write_timing(&out.join("timing.csv"), &table)?;
    output::write_json(&out.join("timing.json"), &table)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct DensitySummary<'a> {
    time: f64,
    bandwidth: f64,
    coords: &'a [usize],
    masses: Vec<f64>,
    modes: Vec<usize>,
    joint_mass: Option<f64>,
}

impl<'a> DensitySummary<'a> {
    fn new(fig: &'a DensityFigure, bandwidth: f64) -> Self {
        Self {
            time: fig.time,
            bandwidth,
            coords: &fig.coords,
            masses: fig.marginals.iter().map(|m| m.mass()).collect(),
            modes: fig
                .marginals
                .iter()
                .map(|m| count_modes(&m.values, 0.01))
                .collect(),
            joint_mass: fig.joint.as_ref().map(|j| j.mass()),
        }
    }
}

fn cmd_density(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let model = cfg.model.build()?;
    let fig = density_figure(model.as_ref(), &cfg.density)?;
    output::write_density(&out.join("density_1d.csv"), &out.join("density_2d.csv"), &fig)?;
    output::write_json(
        &out.join("density.json"),
        &DensitySummary::new(&fig, cfg.density.bandwidth),
    )?;
    Ok(EXIT_OK)
}
