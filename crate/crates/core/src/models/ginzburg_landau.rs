use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::measure::MeasureView;
use crate::model::{Model, RegularityConstants};

/// Stochastic Ginzburg-Landau equation with a linear mean-field term,
/// `dX = ((s^2/2) X - X^3 + c E[X]) dt + s X dW`, applied coordinatewise in
/// `d` dimensions with a diagonal noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GinzburgLandauParams {
    pub sigma: f64,
    pub c: f64,
    pub x0: f64,
}

impl Default for GinzburgLandauParams {
    fn default() -> Self {
        Self {
            sigma: 1.5,
            c: 0.5,
            x0: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GinzburgLandau {
    params: GinzburgLandauParams,
    dim: usize,
    linear_rate: f64,
}

impl GinzburgLandau {
    pub fn new(params: GinzburgLandauParams, dim: usize) -> Self {
        assert!(params.sigma >= 0.0, "sigma must be non-negative");
        assert!(dim >= 1, "dimension must be positive");
        Self {
            params,
            dim,
            linear_rate: 0.5 * params.sigma * params.sigma,
        }
    }

    pub fn params(&self) -> &GinzburgLandauParams {
        &self.params
    }
}

pub fn ginzburg_landau(params: GinzburgLandauParams) -> GinzburgLandau {
    GinzburgLandau::new(params, 1)
}

/// `d`-dimensional variant used for dimension-scaling studies.
pub fn ginzburg_landau_nd(params: GinzburgLandauParams, dim: usize) -> GinzburgLandau {
    GinzburgLandau::new(params, dim)
}

impl Model for GinzburgLandau {
    fn dim(&self) -> usize {
        self.dim
    }

    fn bm_dim(&self) -> usize {
        self.dim
    }

    fn drift(&self, _t: f64, x: &[f64], mu: &MeasureView<'_>, out: &mut [f64]) {
        for ((o, &xi), &m) in out.iter_mut().zip(x).zip(mu.mean()) {
            *o = self.linear_rate * xi - xi * xi * xi + self.params.c * m;
        }
    }

    fn diffusion(&self, _t: f64, x: &[f64], _mu: &MeasureView<'_>, out: &mut [f64]) {
        out.fill(0.0);
        for (i, &xi) in x.iter().enumerate() {
            out[i * self.dim + i] = self.params.sigma * xi;
        }
    }

    fn diffuse(&self, _t: f64, x: &[f64], _mu: &MeasureView<'_>, dw: &[f64], out: &mut [f64]) {
        for ((o, &xi), &w) in out.iter_mut().zip(x).zip(dw) {
            *o = self.params.sigma * xi * w;
        }
    }

    fn sample_initial(&self, _rng: &mut dyn RngCore, out: &mut [f64]) {
        out.fill(self.params.x0);
    }

    /// `L_b = s^2/2 + c`. For the growth bound, Young's inequality on the
    /// coupling gives `<x,b> + |sigma|^2/2 <= s^4/4 + (c/2)|x|^2 + (c/2)|m|^2`,
    /// so `beta = c/2` and `alpha = s^4/4` (plus the measure-dependent
    /// `(c/2)|m|^2`, which is not a constant).
    fn constants(&self) -> RegularityConstants {
        let s2 = self.params.sigma * self.params.sigma;
        RegularityConstants {
            lipschitz_onesided: 0.5 * s2 + self.params.c,
            lipschitz_diffusion: self.params.sigma,
            poly_growth_q: 2.0,
            monotone_alpha: 0.25 * s2 * s2,
            monotone_beta: 0.5 * self.params.c,
        }
    }

    fn name(&self) -> &str {
        "ginzburg_landau"
    }
}
