//! Empirical measures of particle clouds and diagnostics on them.

mod kde;
mod wasserstein;

pub use kde::{
    kde_1d, kde_2d, linspace, padded_grid, DensityEstimate, DensityEstimate2d, DEFAULT_BANDWIDTH,
};
pub use wasserstein::{w2_coupled, w2_exact_1d};

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Number of particles summed sequentially before the pairwise tree takes
/// over. Fixed so that reductions do not depend on the worker count.
pub const SUM_BLOCK: usize = 64;

/// Read-only view of an `N x d` particle cloud (row-major) with its first
/// and per-coordinate second moments cached.
#[derive(Debug, Clone)]
pub struct MeasureView<'a> {
    positions: &'a [f64],
    dim: usize,
    mean: Vec<f64>,
    second_moment: Vec<f64>,
}

impl<'a> MeasureView<'a> {
    pub fn new(positions: &'a [f64], dim: usize) -> Result<Self> {
        if dim == 0 || positions.is_empty() || positions.len() % dim != 0 {
            return Err(Error::ShapeMismatch(format!(
                "{} values cannot form a non-empty cloud of dimension {dim}",
                positions.len()
            )));
        }
        let mean = (0..dim)
            .map(|j| shifted_mean(positions, dim, j))
            .collect();
        let second_moment = (0..dim)
            .map(|j| coordinate_power_mean(positions, dim, j, 2))
            .collect();
        Ok(Self {
            positions,
            dim,
            mean,
            second_moment,
        })
    }

    /// View with moments already computed for `positions`.
    pub(crate) fn from_parts(
        positions: &'a [f64],
        dim: usize,
        mean: Vec<f64>,
        second_moment: Vec<f64>,
    ) -> Self {
        debug_assert!(mean.len() == dim && second_moment.len() == dim);
        Self {
            positions,
            dim,
            mean,
            second_moment,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn positions(&self) -> &'a [f64] {
        self.positions
    }

    pub fn particle(&self, i: usize) -> &'a [f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    /// `(1/N) sum_j X^j`.
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Per-coordinate `(1/N) sum_j (X^j_c)^2`.
    pub fn second_moment(&self) -> &[f64] {
        &self.second_moment
    }
}

/// Per-coordinate empirical moment `(1/N) sum_j (X^j)^p` for even `p`.
pub fn moments(view: &MeasureView<'_>, p: u32) -> Result<Vec<f64>> {
    if !matches!(p, 2 | 4 | 6 | 8) {
        return Err(Error::config(format!("moment order must be 2, 4, 6 or 8, got {p}")));
    }
    if p == 2 {
        return Ok(view.second_moment().to_vec());
    }
    Ok((0..view.dim())
        .map(|j| coordinate_power_mean(view.positions(), view.dim(), j, p))
        .collect())
}

/// Pairwise (tree) sum with sequential leaves of [`SUM_BLOCK`] terms.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= SUM_BLOCK {
        return values.iter().sum();
    }
    let blocks = values.len().div_ceil(SUM_BLOCK);
    let half = blocks.div_ceil(2) * SUM_BLOCK;
    pairwise_sum(&values[..half]) + pairwise_sum(&values[half..])
}

fn block_partials(positions: &[f64], dim: usize, f: impl Fn(&[f64]) -> f64 + Sync) -> Vec<f64> {
    positions
        .par_chunks(SUM_BLOCK * dim)
        .map(|block| f(block))
        .collect()
}

/// Tree-reduce per-block partial sums, matching the shape used by
/// [`pairwise_sum`] on the flattened values.
fn reduce_partials(partials: &[f64]) -> f64 {
    match partials.len() {
        0 => 0.0,
        1 => partials[0],
        n => {
            let half = n.div_ceil(2);
            reduce_partials(&partials[..half]) + reduce_partials(&partials[half..])
        }
    }
}

/// Mean computed as `x_0 + (1/N) sum_j (x_j - x_0)` so that a constant
/// cloud reproduces its common value exactly.
fn shifted_mean(positions: &[f64], dim: usize, coord: usize) -> f64 {
    let n = positions.len() / dim;
    let anchor = positions[coord];
    let partials = block_partials(positions, dim, |block| {
        block.iter().skip(coord).step_by(dim).map(|x| x - anchor).sum()
    });
    anchor + reduce_partials(&partials) / n as f64
}

fn coordinate_power_mean(positions: &[f64], dim: usize, coord: usize, p: u32) -> f64 {
    let n = positions.len() / dim;
    let partials = block_partials(positions, dim, |block| {
        block
            .iter()
            .skip(coord)
            .step_by(dim)
            .map(|x| x.powi(p as i32))
            .sum()
    });
    reduce_partials(&partials) / n as f64
}
