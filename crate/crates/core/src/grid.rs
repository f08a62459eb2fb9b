//! Uniform time grid `{0, h, 2h, ..., Mh}` indexed by integer step.
//!
//! Real times are always derived as `k * h` from the step index so that no
//! error accumulates from repeated addition.

use crate::error::{Error, Result};

/// Relative slack (in units of the horizon) applied when deciding whether a
/// real time lies on or inside the grid.
pub const GRID_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, n_steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::config(format!("horizon must be positive, got {horizon}")));
        }
        if n_steps == 0 {
            return Err(Error::config("number of steps must be at least 1"));
        }
        Ok(Self { horizon, n_steps })
    }

    /// Build a grid from a step size that must divide the horizon.
    pub fn from_step(h: f64, horizon: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::config(format!("step size must be positive, got {h}")));
        }
        let ratio = horizon / h;
        let m = ratio.round();
        if m < 1.0 || ((ratio - m) * h).abs() > GRID_SLACK * horizon {
            return Err(Error::config(format!(
                "step size {h} does not divide horizon {horizon}"
            )));
        }
        Self::new(horizon, m as usize)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn step_size(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    /// Time of grid point `k`.
    pub fn time(&self, k: usize) -> f64 {
        if k == self.n_steps {
            self.horizon
        } else {
            k as f64 * self.step_size()
        }
    }

    /// Index of the largest grid point not exceeding `t`.
    pub fn floor_index(&self, t: f64) -> Result<usize> {
        let slack = GRID_SLACK * self.horizon;
        if !(t >= -slack && t <= self.horizon + slack) {
            return Err(Error::Domain {
                t,
                horizon: self.horizon,
            });
        }
        let h = self.step_size();
        let mut k = ((t.max(0.0)) / h).floor() as usize;
        // Correct for the quotient landing just below an integer.
        while k < self.n_steps && self.time(k + 1) <= t + slack {
            k += 1;
        }
        while k > 0 && self.time(k) > t + slack {
            k -= 1;
        }
        Ok(k.min(self.n_steps))
    }

    /// `kappa(t)`: the largest grid point `<= t`, returned as a time.
    pub fn project(&self, t: f64) -> Result<f64> {
        self.floor_index(t).map(|k| self.time(k))
    }
}

/// Floor-to-grid projection for a grid of step `h` on `[0, horizon]`.
pub fn grid_projection(t: f64, h: f64, horizon: f64) -> Result<f64> {
    TimeGrid::from_step(h, horizon)?.project(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn projects_between_grid_points() {
        assert_eq!(grid_projection(0.07, 0.05, 2.0).unwrap(), 0.05);
    }

    #[test]
    fn grid_point_maps_to_itself() {
        assert_eq!(grid_projection(0.05, 0.05, 2.0).unwrap(), 0.05);
        assert_eq!(grid_projection(0.0, 0.05, 2.0).unwrap(), 0.0);
        assert_eq!(grid_projection(2.0, 0.05, 2.0).unwrap(), 2.0);
    }

    #[test]
    fn just_below_the_horizon() {
        // Enumerated oracle: sup of {0, 0.25, ..., 2} below t.
        let t = 1.999999;
        let oracle = (0..=8)
            .map(|k| k as f64 * 0.25)
            .filter(|&s| s <= t)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(oracle, 1.75);
        assert_eq!(grid_projection(t, 0.25, 2.0).unwrap(), oracle);
    }

    #[test]
    fn outside_domain_is_rejected() {
        assert!(matches!(grid_projection(-0.1, 0.05, 2.0), Err(Error::Domain { .. })));
        assert!(matches!(grid_projection(2.1, 0.05, 2.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn non_dividing_step_is_rejected() {
        assert!(grid_projection(0.1, 0.3, 2.0).is_err());
    }

    #[test]
    fn projection_is_an_integer_multiple_of_h() {
        let grid = TimeGrid::new(2.0, 40).unwrap();
        let k = grid.floor_index(1.234).unwrap();
        assert_eq!(grid.project(1.234).unwrap(), k as f64 * grid.step_size());
    }

    proptest! {
        #[test]
        fn projection_is_idempotent(t in 0.0f64..=3.0, m in 1usize..500) {
            let grid = TimeGrid::new(3.0, m).unwrap();
            let once = grid.project(t).unwrap();
            prop_assert!(once <= t + GRID_SLACK * 3.0);
            prop_assert_eq!(grid.project(once).unwrap(), once);
        }
    }
}
