//! Gaussian kernel density estimation on fixed evaluation grids.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

/// Kernel-smoothing bandwidth used for the bundled density studies.
pub const DEFAULT_BANDWIDTH: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityEstimate {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub bandwidth: f64,
}

impl DensityEstimate {
    /// Trapezoidal integral of the estimate over its grid.
    pub fn mass(&self) -> f64 {
        trapezoid(&self.grid, &self.values)
    }
}

/// Product-kernel estimate on the tensor grid `grid_x x grid_y`; `values` is
/// row-major with `x` as the slow index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityEstimate2d {
    pub grid_x: Vec<f64>,
    pub grid_y: Vec<f64>,
    pub values: Vec<f64>,
    pub bandwidth: f64,
}

impl DensityEstimate2d {
    pub fn mass(&self) -> f64 {
        let ny = self.grid_y.len();
        let rows: Vec<f64> = self
            .values
            .chunks(ny)
            .map(|row| trapezoid(&self.grid_y, row))
            .collect();
        trapezoid(&self.grid_x, &rows)
    }

    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[ix * self.grid_y.len() + iy]
    }
}

fn std_normal_pdf(u: f64) -> f64 {
    (-0.5 * u * u).exp() / (2.0 * PI).sqrt()
}

fn check_inputs(samples: usize, bandwidth: f64, grid: &[f64]) -> Result<()> {
    if samples == 0 {
        return Err(Error::config("density estimation needs at least one sample"));
    }
    if !(bandwidth.is_finite() && bandwidth > 0.0) {
        return Err(Error::config(format!("bandwidth must be positive, got {bandwidth}")));
    }
    if grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::config("evaluation grid must be sorted"));
    }
    Ok(())
}

/// `f(x) = (1 / (N bw)) sum_j phi((x - s_j) / bw)` on every grid point.
pub fn kde_1d(samples: &[f64], bandwidth: f64, grid: &[f64]) -> Result<DensityEstimate> {
    check_inputs(samples.len(), bandwidth, grid)?;
    let norm = 1.0 / (samples.len() as f64 * bandwidth);
    let values = grid
        .iter()
        .map(|&x| {
            norm * samples
                .iter()
                .map(|&s| std_normal_pdf((x - s) / bandwidth))
                .sum::<f64>()
        })
        .collect();
    Ok(DensityEstimate {
        grid: grid.to_vec(),
        values,
        bandwidth,
    })
}

/// Bivariate estimate with a product Gaussian kernel, the same bandwidth on
/// both axes.
pub fn kde_2d(
    xs: &[f64],
    ys: &[f64],
    bandwidth: f64,
    grid_x: &[f64],
    grid_y: &[f64],
) -> Result<DensityEstimate2d> {
    if xs.len() != ys.len() {
        return Err(Error::ShapeMismatch(format!(
            "2-D density needs paired samples, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    check_inputs(xs.len(), bandwidth, grid_x)?;
    check_inputs(ys.len(), bandwidth, grid_y)?;
    let norm = 1.0 / (xs.len() as f64 * bandwidth * bandwidth);
    // Kernel weights factor per axis: K[gx][j] and K[gy][j].
    let kx: Vec<Vec<f64>> = grid_x
        .iter()
        .map(|&g| xs.iter().map(|&s| std_normal_pdf((g - s) / bandwidth)).collect())
        .collect();
    let ky: Vec<Vec<f64>> = grid_y
        .iter()
        .map(|&g| ys.iter().map(|&s| std_normal_pdf((g - s) / bandwidth)).collect())
        .collect();
    let mut values = Vec::with_capacity(grid_x.len() * grid_y.len());
    for wx in &kx {
        for wy in &ky {
            let s: f64 = wx.iter().zip(wy).map(|(a, b)| a * b).sum();
            values.push(norm * s);
        }
    }
    Ok(DensityEstimate2d {
        grid_x: grid_x.to_vec(),
        grid_y: grid_y.to_vec(),
        values,
        bandwidth,
    })
}

/// Evenly spaced grid covering the samples plus `pad` on each side.
pub fn padded_grid(samples: &[f64], pad: f64, n_points: usize) -> Vec<f64> {
    let finite = samples.iter().copied().filter(|x| x.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
        (lo.min(x), hi.max(x))
    });
    let (lo, hi) = if lo.is_finite() { (lo - pad, hi + pad) } else { (-pad, pad) };
    linspace(lo, hi, n_points)
}

pub fn linspace(lo: f64, hi: f64, n_points: usize) -> Vec<f64> {
    match n_points {
        0 => Vec::new(),
        1 => vec![lo],
        n => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { hi } else { lo + i as f64 * step })
                .collect()
        }
    }
}

fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    grid.windows(2)
        .zip(values.windows(2))
        .map(|(g, v)| 0.5 * (g[1] - g[0]) * (v[0] + v[1]))
        .sum()
}
