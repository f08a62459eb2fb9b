use serde::{Deserialize, Serialize};

use crate::config::SchemeConfig;
use crate::engine::{simulate, SimulationRun};
use crate::error::{Error, Result};
use crate::measure::{kde_1d, kde_2d, padded_grid, DensityEstimate, DensityEstimate2d, DEFAULT_BANDWIDTH};
use crate::model::Model;

/// Grids extend this many bandwidths beyond the sample range.
pub const GRID_PAD_BANDWIDTHS: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DensitySpec {
    pub scheme: SchemeConfig,
    pub n_particles: usize,
    pub seed: u64,
    pub bandwidth: f64,
    /// 1-based coordinates to estimate; two coordinates also give a joint
    /// estimate. Empty selects the first two (or the only one).
    pub coords: Vec<usize>,
    pub grid_points: usize,
    pub grid_points_2d: usize,
}

impl Default for DensitySpec {
    fn default() -> Self {
        Self {
            scheme: SchemeConfig {
                n_steps: 1 << 12,
                horizon: 1.2,
                ..SchemeConfig::default()
            },
            n_particles: 1000,
            seed: 0,
            bandwidth: DEFAULT_BANDWIDTH,
            coords: Vec::new(),
            grid_points: 400,
            grid_points_2d: 120,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityFigure {
    pub time: f64,
    pub coords: Vec<usize>,
    pub marginals: Vec<DensityEstimate>,
    pub joint: Option<DensityEstimate2d>,
}

/// Number of strict interior local maxima above `floor * max`.
pub fn count_modes(values: &[f64], floor: f64) -> usize {
    let peak = values.iter().cloned().fold(0.0, f64::max);
    values
        .windows(3)
        .filter(|w| w[1] > w[0] && w[1] >= w[2] && w[1] > floor * peak)
        .count()
}

/// Simulate to the horizon and estimate the law of the chosen coordinates.
pub fn density_figure<M: Model + ?Sized>(model: &M, spec: &DensitySpec) -> Result<DensityFigure> {
    let d = model.dim();
    if !(spec.bandwidth.is_finite() && spec.bandwidth > 0.0) {
        return Err(Error::config(format!(
            "bandwidth must be positive, got {}",
            spec.bandwidth
        )));
    }
    let coords: Vec<usize> = if spec.coords.is_empty() {
        (1..=d.min(2)).collect()
    } else {
        spec.coords.clone()
    };
    if coords.iter().any(|&c| c == 0 || c > d) {
        return Err(Error::config(format!("coords {coords:?} must lie in 1..={d}")));
    }
    if spec.grid_points < 2 {
        return Err(Error::config("grid_points must be at least 2"));
    }
    let run = SimulationRun {
        scheme: spec.scheme.clone(),
        n_particles: spec.n_particles,
        master_seed: spec.seed,
        ..SimulationRun::default()
    };
    let res = simulate(model, &run)?;
    let column = |c: usize| -> Vec<f64> {
        res.final_positions.chunks(d).map(|x| x[c - 1]).collect()
    };
    let pad = GRID_PAD_BANDWIDTHS * spec.bandwidth;
    let mut marginals = Vec::with_capacity(spec.coords.len());
    for &c in &coords {
        let samples = column(c);
        let grid = padded_grid(&samples, pad, spec.grid_points);
        marginals.push(kde_1d(&samples, spec.bandwidth, &grid)?);
    }
    let joint = match coords[..] {
        [a, b] if spec.grid_points_2d >= 2 => {
            let (xs, ys) = (column(a), column(b));
            let gx = padded_grid(&xs, pad, spec.grid_points_2d);
            let gy = padded_grid(&ys, pad, spec.grid_points_2d);
            Some(kde_2d(&xs, &ys, spec.bandwidth, &gx, &gy)?)
        }
        _ => None,
    };
    Ok(DensityFigure {
        time: spec.scheme.horizon,
        coords,
        marginals,
        joint,
    })
}
