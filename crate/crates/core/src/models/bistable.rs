use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::measure::MeasureView;
use crate::model::{Model, RegularityConstants};

/// Overdamped particle in the double well `V(x) = x^4/4 - x^2/2` with an
/// optional linear attraction of strength `theta` towards the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BistablePotentialParams {
    pub theta: f64,
    pub sigma: f64,
    pub x0: f64,
}

impl Default for BistablePotentialParams {
    fn default() -> Self {
        Self {
            theta: 0.0,
            sigma: 1.0,
            x0: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Bistable {
    p: BistablePotentialParams,
}

pub fn bistable(params: BistablePotentialParams) -> Bistable {
    assert!(params.theta >= 0.0, "theta must be non-negative");
    Bistable { p: params }
}

impl Model for Bistable {
    fn dim(&self) -> usize {
        1
    }

    fn bm_dim(&self) -> usize {
        1
    }

    fn drift(&self, _t: f64, x: &[f64], mu: &MeasureView<'_>, out: &mut [f64]) {
        let x = x[0];
        out[0] = -x * x * x + x - self.p.theta * (x - mu.mean()[0]);
    }

    fn diffusion(&self, _t: f64, _x: &[f64], _mu: &MeasureView<'_>, out: &mut [f64]) {
        out[0] = self.p.sigma;
    }

    fn diffuse(&self, _t: f64, _x: &[f64], _mu: &MeasureView<'_>, dw: &[f64], out: &mut [f64]) {
        out[0] = self.p.sigma * dw[0];
    }

    fn sample_initial(&self, _rng: &mut dyn RngCore, out: &mut [f64]) {
        out[0] = self.p.x0;
    }

    /// `L_b = 1 - theta`; the quartic absorbs every `|x|^2` term except the
    /// coupling's Young remainder, so `beta = theta/2`, `alpha = sigma^2/2 + 1/4`.
    fn constants(&self) -> RegularityConstants {
        let p = &self.p;
        RegularityConstants {
            lipschitz_onesided: 1.0 - p.theta,
            lipschitz_diffusion: 0.0,
            poly_growth_q: 2.0,
            monotone_alpha: 0.5 * p.sigma * p.sigma + 0.25,
            monotone_beta: 0.5 * p.theta,
        }
    }

    fn name(&self) -> &str {
        "bistable"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn drift(theta: f64, x: f64, mean: f64) -> f64 {
        let model = bistable(BistablePotentialParams {
            theta,
            ..Default::default()
        });
        let cloud = [mean];
        let mu = MeasureView::new(&cloud, 1).unwrap();
        let mut out = [0.0];
        model.drift(0.0, &[x], &mu, &mut out);
        out[0]
    }

    #[test]
    fn drift_examples() {
        for theta in [0.0, 0.3, 5.0] {
            assert_eq!(drift(theta, 1.0, 1.0), 0.0);
        }
        assert_eq!(drift(1.0, 0.0, 0.0), 0.0);
        assert_eq!(drift(1.0, 2.0, 0.0), -8.0);
    }

    #[test]
    fn one_sided_probe() {
        let model = bistable(BistablePotentialParams {
            theta: 0.5,
            ..Default::default()
        });
        let report = crate::model::validate_model(&model, 5000, 9);
        assert!(report.max_ratio <= 0.5, "{}", report.max_ratio);
    }
}
