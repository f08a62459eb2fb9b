//! Mean-field FitzHugh-Nagumo network with chemical synapses: membrane
//! potential `x1`, recovery variable `x2` and synaptic gating `x3`.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::measure::MeasureView;
use crate::model::{Model, RegularityConstants};
use crate::rng::standard_normal_pair;

/// Below this the factor `exp(-Lambda / (1 - (2 x3 - 1)^2))` is taken as 0.
const EXPONENT_FLOOR: f64 = -700.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NeuronNetworkParams {
    pub v0: f64,
    pub sigma_v0: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub i_ext: f64,
    pub sigma_ext: f64,
    pub w0: f64,
    pub sigma_w0: f64,
    pub v_rev: f64,
    pub a_r: f64,
    pub a_d: f64,
    pub t_max: f64,
    pub lambda: f64,
    pub y0: f64,
    pub sigma_y0: f64,
    pub j: f64,
    pub sigma_j: f64,
    pub v_t: f64,
    pub gamma: f64,
    pub big_lambda: f64,
}

impl Default for NeuronNetworkParams {
    fn default() -> Self {
        Self {
            v0: 0.0,
            sigma_v0: 0.4,
            a: 0.7,
            b: 0.8,
            c: 0.08,
            i_ext: 0.5,
            sigma_ext: 0.5,
            w0: 0.5,
            sigma_w0: 0.4,
            v_rev: 1.0,
            a_r: 1.0,
            a_d: 1.0,
            t_max: 1.0,
            lambda: 0.2,
            y0: 0.3,
            sigma_y0: 0.05,
            j: 1.0,
            sigma_j: 0.2,
            v_t: 2.0,
            gamma: 0.1,
            big_lambda: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NeuronNetwork {
    p: NeuronNetworkParams,
}

pub fn neuron_network(params: NeuronNetworkParams) -> NeuronNetwork {
    assert!(
        params.a_r > 0.0 && params.a_d > 0.0 && params.t_max > 0.0,
        "a_r, a_d and t_max must be positive"
    );
    NeuronNetwork { p: params }
}

impl NeuronNetwork {
    pub fn params(&self) -> &NeuronNetworkParams {
        &self.p
    }

    /// Synaptic opening rate `a_r T_max / (1 + exp(-lambda (x1 - V_T)))`.
    fn opening_rate(&self, x1: f64) -> f64 {
        let p = &self.p;
        p.a_r * p.t_max / (1.0 + (-p.lambda * (x1 - p.v_t)).exp())
    }

    /// Noise intensity of the gating variable; exactly 0 outside `x3 in (0, 1)`.
    pub fn sigma32(&self, x: &[f64]) -> f64 {
        let (x1, x3) = (x[0], x[2]);
        if !(x3 > 0.0 && x3 < 1.0) {
            return 0.0;
        }
        let s = 2.0 * x3 - 1.0;
        let exponent = -self.p.big_lambda / (1.0 - s * s);
        if !(exponent >= EXPONENT_FLOOR) {
            return 0.0;
        }
        let radicand = (self.opening_rate(x1) * (1.0 - x3) + self.p.a_d * x3).max(0.0);
        radicand.sqrt() * self.p.gamma * exponent.exp()
    }

    fn coupling(&self, x1: f64, mu: &MeasureView<'_>) -> f64 {
        (x1 - self.p.v_rev) * mu.mean()[2]
    }
}

impl Model for NeuronNetwork {
    fn dim(&self) -> usize {
        3
    }

    fn bm_dim(&self) -> usize {
        3
    }

    fn drift(&self, _t: f64, x: &[f64], mu: &MeasureView<'_>, out: &mut [f64]) {
        let p = &self.p;
        let (x1, x2, x3) = (x[0], x[1], x[2]);
        out[0] = x1 - x1 * x1 * x1 / 3.0 - x2 + p.i_ext - p.j * self.coupling(x1, mu);
        out[1] = p.c * (x1 + p.a - p.b * x2);
        out[2] = self.opening_rate(x1) * (1.0 - x3) - p.a_d * x3;
    }

    fn diffusion(&self, _t: f64, x: &[f64], mu: &MeasureView<'_>, out: &mut [f64]) {
        out.fill(0.0);
        out[0] = self.p.sigma_ext;
        out[2] = -self.p.sigma_j * self.coupling(x[0], mu);
        out[7] = self.sigma32(x);
    }

    fn diffuse(&self, _t: f64, x: &[f64], mu: &MeasureView<'_>, dw: &[f64], out: &mut [f64]) {
        out[0] = self.p.sigma_ext * dw[0] - self.p.sigma_j * self.coupling(x[0], mu) * dw[2];
        out[1] = 0.0;
        out[2] = self.sigma32(x) * dw[1];
    }

    /// Independent Gaussians per coordinate; the `sigma_*0` parameters are
    /// standard deviations.
    fn sample_initial(&self, mut rng: &mut dyn RngCore, out: &mut [f64]) {
        let p = &self.p;
        let (z1, z2) = standard_normal_pair(&mut rng);
        let (z3, _) = standard_normal_pair(&mut rng);
        out[0] = p.v0 + p.sigma_v0 * z1;
        out[1] = p.w0 + p.sigma_w0 * z2;
        out[2] = p.y0 + p.sigma_y0 * z3;
    }

    /// Declared from the drift Jacobian on the physiological range
    /// `x3, E[x3] in [0, 1]`: the cubic caps the `x1` block at 1 and the
    /// synaptic cross terms add a small margin. Not globally valid; the
    /// model is shipped with these values as user-facing metadata only.
    fn constants(&self) -> RegularityConstants {
        let p = &self.p;
        RegularityConstants {
            lipschitz_onesided: 1.25,
            lipschitz_diffusion: p.sigma_j.max(p.gamma).max(p.sigma_ext),
            poly_growth_q: 2.0,
            monotone_alpha: 1.0,
            monotone_beta: 0.5,
        }
    }

    fn name(&self) -> &str {
        "neuron_network"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> NeuronNetwork {
        neuron_network(NeuronNetworkParams::default())
    }

    #[test]
    fn sigma32_vanishes_on_the_boundary() {
        let m = model();
        for x3 in [0.0, 1.0, -0.5, 1.5, 1.0 + 1e-16, -1e-300] {
            assert_eq!(m.sigma32(&[0.3, 0.0, x3]), 0.0, "x3 = {x3}");
        }
    }

    #[test]
    fn sigma32_at_midpoint() {
        let m = model();
        let v = m.sigma32(&[2.0, 0.0, 0.5]);
        let expected = 0.75f64.sqrt() * 0.1 * (-0.5f64).exp();
        assert!((v - expected).abs() < 1e-15);
        assert!((v - 0.052527).abs() < 5e-7);
    }

    #[test]
    fn sigma32_near_boundary_is_finite() {
        let m = model();
        for x3 in [1e-300, 1e-17, 1.0 - 1e-16, 0.999_999_999] {
            let v = m.sigma32(&[0.0, 0.0, x3]);
            assert!(v.is_finite() && v >= 0.0, "x3 = {x3}: {v}");
        }
    }

    #[test]
    fn sigma32_is_bounded_with_interior_maximum() {
        let m = model();
        let mut best = (0.0, 0.0);
        for i in 0..=200 {
            let x1 = -5.0 + 10.0 * i as f64 / 200.0;
            for k in 0..=1000 {
                let x3 = k as f64 / 1000.0;
                let v = m.sigma32(&[x1, 0.0, x3]);
                assert!(v.is_finite());
                if v > best.0 {
                    best = (v, x3);
                }
            }
        }
        assert!(best.0 < 1.0);
        assert!(best.1 > 0.0 && best.1 < 1.0);
    }

    #[test]
    fn drift_second_component() {
        let m = model();
        let cloud = [0.0, 0.0, 0.3];
        let mu = MeasureView::new(&cloud, 3).unwrap();
        let mut out = [0.0; 3];
        m.drift(0.0, &[0.0, 0.0, 0.3], &mu, &mut out);
        assert!((out[1] - 0.056).abs() < 1e-15);
    }

    #[test]
    fn drift_first_component_with_coupling() {
        let m = model();
        let cloud = [0.0, 0.0, 0.2, 0.0, 0.0, 0.4];
        let mu = MeasureView::new(&cloud, 3).unwrap();
        let mut out = [0.0; 3];
        m.drift(0.0, &[2.0, 1.0, 0.5], &mu, &mut out);
        // 2 - 8/3 - 1 + 0.5 - 1 * (2 - 1) * 0.3
        let expected = 2.0 - 8.0 / 3.0 - 1.0 + 0.5 - 0.3;
        assert!((out[0] - expected).abs() < 1e-12);
        // Logistic at x1 = V_T is 1/2: 0.5 * 0.5 - 0.5.
        assert!((out[2] - (-0.25)).abs() < 1e-15);
    }

    #[test]
    fn diffuse_matches_matrix() {
        let m = model();
        let cloud = [0.1, 0.2, 0.3, -0.4, 0.5, 0.6];
        let mu = MeasureView::new(&cloud, 3).unwrap();
        let x = [1.7, -0.3, 0.42];
        let dw = [0.3, -0.7, 0.2];
        let mut sigma = [0.0; 9];
        let mut fast = [0.0; 3];
        m.diffusion(0.0, &x, &mu, &mut sigma);
        m.diffuse(0.0, &x, &mu, &dw, &mut fast);
        for i in 0..3 {
            let slow: f64 = (0..3).map(|j| sigma[i * 3 + j] * dw[j]).sum();
            assert!((fast[i] - slow).abs() < 1e-15);
        }
        assert_eq!(sigma[0], 0.5);
        assert!((sigma[2] + 0.2 * 0.7 * 0.45).abs() < 1e-15);
    }

    #[test]
    fn coefficients_finite_at_gating_boundaries() {
        let m = model();
        let cloud = [0.0, 0.0, 1.0];
        let mu = MeasureView::new(&cloud, 3).unwrap();
        for x3 in [0.0, 1.0] {
            let mut b = [0.0; 3];
            let mut s = [0.0; 9];
            m.drift(0.0, &[1.0, 1.0, x3], &mu, &mut b);
            m.diffusion(0.0, &[1.0, 1.0, x3], &mu, &mut s);
            assert!(b.iter().chain(&s).all(|v| v.is_finite()));
        }
    }

    #[test]
    fn defaults_match_parameter_table() {
        let p = NeuronNetworkParams::default();
        let table = [
            p.v0, p.sigma_v0, p.a, p.b, p.c, p.i_ext, p.sigma_ext, p.w0, p.sigma_w0, p.v_rev,
            p.a_r, p.a_d, p.t_max, p.lambda, p.y0, p.sigma_y0, p.j, p.sigma_j, p.v_t, p.gamma,
            p.big_lambda,
        ];
        let expected = [
            0.0, 0.4, 0.7, 0.8, 0.08, 0.5, 0.5, 0.5, 0.4, 1.0, 1.0, 1.0, 1.0, 0.2, 0.3, 0.05, 1.0,
            0.2, 2.0, 0.1, 0.5,
        ];
        assert_eq!(table, expected);
    }

    #[test]
    fn initial_sampler_moments() {
        let m = model();
        let n = 20_000;
        let mut sum = [0.0; 3];
        let mut sq = [0.0; 3];
        let mut x = [0.0; 3];
        for i in 0..n {
            let mut rng = crate::rng::initial_stream(1, i);
            m.sample_initial(&mut rng, &mut x);
            for k in 0..3 {
                sum[k] += x[k];
                sq[k] += x[k] * x[k];
            }
        }
        let means = [0.0, 0.5, 0.3];
        let sds = [0.4, 0.4, 0.05];
        for k in 0..3 {
            let mean = sum[k] / n as f64;
            let sd = (sq[k] / n as f64 - mean * mean).sqrt();
            assert!((mean - means[k]).abs() < 4.0 * sds[k] / (n as f64).sqrt() + 1e-12);
            assert!((sd / sds[k] - 1.0).abs() < 0.03);
        }
    }
}
