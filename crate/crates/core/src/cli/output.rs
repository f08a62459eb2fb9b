use std::fs::File;
use std::path::Path;

use serde::Serialize;

use crate::engine::SimulationResult;
use crate::error::{Error, Result};
use crate::harness::{BlowupStudy, ConvergenceStudy, DensityFigure, TimingTable};

type Writer = csv::Writer<File>;

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

fn writer(path: &Path) -> Result<Writer> {
    csv::Writer::from_path(path).map_err(csv_error)
}

fn row<I, S>(w: &mut Writer, fields: I) -> Result<()>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    w.write_record(fields).map_err(csv_error)
}

fn opt(v: Option<usize>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.into()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn stats_header(dim: usize) -> Vec<String> {
    let mut h = vec!["step".to_string(), "time".to_string()];
    h.extend((1..=dim).map(|j| format!("mean_{j}")));
    h.extend((1..=dim).map(|j| format!("m2_{j}")));
    h.push("diverged_count".to_string());
    h
}

/// `stats.csv`: one row per completed grid point.
pub fn write_stats(path: &Path, res: &SimulationResult) -> Result<()> {
    let mut w = writer(path)?;
    row(&mut w, stats_header(res.dim))?;
    for s in &res.stats {
        let mut fields = vec![s.step.to_string(), s.time.to_string()];
        fields.extend(s.mean.iter().map(f64::to_string));
        fields.extend(s.second_moment.iter().map(f64::to_string));
        fields.push(s.diverged_count.to_string());
        row(&mut w, fields)?;
    }
    w.flush()?;
    Ok(())
}

/// `snapshots.csv`: one row per particle per stored step.
pub fn write_snapshots(path: &Path, res: &SimulationResult) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["step".to_string(), "time".to_string(), "particle".to_string()];
    header.extend((1..=res.dim).map(|j| format!("x_{j}")));
    row(&mut w, header)?;
    for snap in &res.snapshots {
        for (i, x) in snap.positions.chunks(res.dim).enumerate() {
            let mut fields = vec![snap.step.to_string(), snap.time.to_string(), i.to_string()];
            fields.extend(x.iter().map(f64::to_string));
            row(&mut w, fields)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
pub struct SimulationSummary<'a> {
    pub model: &'a str,
    pub scheme: &'a str,
    pub n_particles: usize,
    pub n_steps: usize,
    pub horizon: f64,
    pub steps_completed: usize,
    pub diverged: bool,
    pub diverged_count: usize,
    pub first_divergence_step: Option<usize>,
    pub majority_divergence_step: Option<usize>,
    pub halted_at: Option<usize>,
    pub final_mean: &'a [f64],
    pub final_second_moment: &'a [f64],
    pub elapsed_secs: f64,
}

impl<'a> SimulationSummary<'a> {
    pub fn new(model: &'a str, res: &'a SimulationResult) -> Self {
        let last = res.stats.last().expect("stats always hold the initial row");
        Self {
            model,
            scheme: res.scheme.kind.as_str(),
            n_particles: res.n_particles,
            n_steps: res.scheme.n_steps,
            horizon: res.scheme.horizon,
            steps_completed: res.steps_completed(),
            diverged: res.diverged,
            diverged_count: last.diverged_count,
            first_divergence_step: res.first_divergence_step,
            majority_divergence_step: res.majority_divergence_step,
            halted_at: res.halted_at,
            final_mean: &last.mean,
            final_second_moment: &last.second_moment,
            elapsed_secs: res.elapsed.as_secs_f64(),
        }
    }
}

pub fn write_convergence(path: &Path, study: &ConvergenceStudy) -> Result<()> {
    let mut w = writer(path)?;
    row(&mut w, ["n_steps", "step_size", "rmse", "runtime_secs", "in_fit"])?;
    for p in &study.points {
        row(
            &mut w,
            [
                p.n_steps.to_string(),
                p.step_size.to_string(),
                p.rmse.to_string(),
                p.runtime_secs.to_string(),
                p.in_fit.to_string(),
            ],
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_blowup(counts: &Path, runs: &Path, study: &BlowupStudy) -> Result<()> {
    let mut w = writer(counts)?;
    row(&mut w, ["n_particles", "repetitions", "diverged"])?;
    for (n, c) in study.particle_counts.iter().zip(&study.counts) {
        row(&mut w, [n.to_string(), study.repetitions.to_string(), c.to_string()])?;
    }
    w.flush()?;
    let mut w = writer(runs)?;
    row(
        &mut w,
        [
            "n_particles",
            "repetition",
            "seed",
            "first_divergence_step",
            "majority_divergence_step",
            "corruption_lag",
        ],
    )?;
    for r in &study.diverged_runs {
        row(
            &mut w,
            [
                r.n_particles.to_string(),
                r.repetition.to_string(),
                r.seed.to_string(),
                r.first_divergence_step.to_string(),
                opt(r.majority_divergence_step),
                opt(r.corruption_lag),
            ],
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_timing(path: &Path, table: &TimingTable) -> Result<()> {
    let mut w = writer(path)?;
    row(&mut w, ["dim", "n_particles", "explicit_secs", "implicit_secs", "ratio"])?;
    for c in &table.cells {
        row(
            &mut w,
            [
                c.dim.to_string(),
                c.n_particles.to_string(),
                c.explicit_secs.to_string(),
                c.implicit_secs.to_string(),
                c.ratio.to_string(),
            ],
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_density(one_d: &Path, two_d: &Path, fig: &DensityFigure) -> Result<()> {
    let mut w = writer(one_d)?;
    row(&mut w, ["coord", "x", "density"])?;
    for (c, est) in fig.coords.iter().zip(&fig.marginals) {
        for (x, v) in est.grid.iter().zip(&est.values) {
            row(&mut w, [c.to_string(), x.to_string(), v.to_string()])?;
        }
    }
    w.flush()?;
    if let Some(joint) = &fig.joint {
        let mut w = writer(two_d)?;
        row(&mut w, ["x", "y", "density"])?;
        for (ix, x) in joint.grid_x.iter().enumerate() {
            for (iy, y) in joint.grid_y.iter().enumerate() {
                row(&mut w, [x.to_string(), y.to_string(), joint.value(ix, iy).to_string()])?;
            }
        }
        w.flush()?;
    }
    Ok(())
}
