use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::measure::MeasureView;
use crate::model::{Model, RegularityConstants};

/// Scalar linear SDE `dX = -rate X dt + (additive + multiplicative X) dW`
/// without measure dependence. Used as a reference for rate studies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinearParams {
    pub rate: f64,
    pub additive: f64,
    pub multiplicative: f64,
    pub x0: f64,
}

impl Default for LinearParams {
    fn default() -> Self {
        Self {
            rate: 1.0,
            additive: 0.1,
            multiplicative: 0.0,
            x0: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Linear {
    p: LinearParams,
}

pub fn linear(params: LinearParams) -> Linear {
    Linear { p: params }
}

impl Model for Linear {
    fn dim(&self) -> usize {
        1
    }

    fn bm_dim(&self) -> usize {
        1
    }

    fn drift(&self, _t: f64, x: &[f64], _mu: &MeasureView<'_>, out: &mut [f64]) {
        out[0] = -self.p.rate * x[0];
    }

    fn diffusion(&self, _t: f64, x: &[f64], _mu: &MeasureView<'_>, out: &mut [f64]) {
        out[0] = self.p.additive + self.p.multiplicative * x[0];
    }

    fn diffuse(&self, _t: f64, x: &[f64], _mu: &MeasureView<'_>, dw: &[f64], out: &mut [f64]) {
        out[0] = (self.p.additive + self.p.multiplicative * x[0]) * dw[0];
    }

    fn sample_initial(&self, _rng: &mut dyn RngCore, out: &mut [f64]) {
        out[0] = self.p.x0;
    }

    /// `(a + s x)^2 / 2 <= a^2 + s^2 x^2`, hence `beta = s^2 - rate`.
    fn constants(&self) -> RegularityConstants {
        let p = &self.p;
        RegularityConstants {
            lipschitz_onesided: -p.rate,
            lipschitz_diffusion: p.multiplicative.abs(),
            poly_growth_q: 1.0,
            monotone_alpha: p.additive * p.additive,
            monotone_beta: p.multiplicative * p.multiplicative - p.rate,
        }
    }

    fn name(&self) -> &str {
        "linear"
    }
}
