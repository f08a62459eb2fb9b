//! The McKean-Vlasov model abstraction
//! `dX = b(t, X, mu) dt + sigma(t, X, mu) dW` with `X in R^d`, `W in R^l`.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::measure::MeasureView;

/// User-declared regularity metadata. None of these are derived from the
/// coefficients; [`validate_model`] only spot-checks the one-sided constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegularityConstants {
    /// `L_b`: `<x - x', b(t,x,mu) - b(t,x',mu)> <= L_b |x - x'|^2`.
    pub lipschitz_onesided: f64,
    /// `L_sigma`.
    pub lipschitz_diffusion: f64,
    /// Polynomial growth exponent `q` of the drift.
    pub poly_growth_q: f64,
    /// `alpha` in `<x, b> + 1/2 sum_a |sigma_a|^2 <= alpha + beta |x|^2`.
    pub monotone_alpha: f64,
    /// `beta` in the same bound.
    pub monotone_beta: f64,
}

impl RegularityConstants {
    /// Upper bound `1 / max(L_b, 2 beta)` on step sizes for which the
    /// implicit equation is uniquely solvable; infinite if both are `<= 0`.
    pub fn implicit_step_bound(&self) -> f64 {
        let c = self.lipschitz_onesided.max(2.0 * self.monotone_beta);
        if c <= 0.0 {
            f64::INFINITY
        } else {
            1.0 / c
        }
    }
}

/// Coefficients of a McKean-Vlasov SDE.
///
/// Implementations must be total on finite inputs and pure given
/// `(t, x, mu)`; they are evaluated concurrently across particles.
pub trait Model: Send + Sync {
    /// State dimension `d`.
    fn dim(&self) -> usize;

    /// Brownian dimension `l`.
    fn bm_dim(&self) -> usize;

    /// Writes `b(t, x, mu)` into `out` (length `d`).
    fn drift(&self, t: f64, x: &[f64], mu: &MeasureView<'_>, out: &mut [f64]);

    /// Writes `sigma(t, x, mu)` into `out` as a row-major `d x l` matrix.
    fn diffusion(&self, t: f64, x: &[f64], mu: &MeasureView<'_>, out: &mut [f64]);

    /// Writes `sigma(t, x, mu) dw` into `out`. Override when the matrix has
    /// structure (diagonal, sparse) that makes the product cheaper.
    fn diffuse(&self, t: f64, x: &[f64], mu: &MeasureView<'_>, dw: &[f64], out: &mut [f64]) {
        let (d, l) = (self.dim(), self.bm_dim());
        let mut stack = [0.0; 64];
        let mut heap = Vec::new();
        let sigma = if d * l <= stack.len() {
            &mut stack[..d * l]
        } else {
            heap.resize(d * l, 0.0);
            &mut heap[..]
        };
        self.diffusion(t, x, mu, sigma);
        for (row, o) in sigma.chunks(l).zip(out.iter_mut()) {
            *o = row.iter().zip(dw).map(|(s, w)| s * w).sum();
        }
    }

    /// Samples `X_0` into `out`.
    fn sample_initial(&self, rng: &mut dyn RngCore, out: &mut [f64]);

    fn constants(&self) -> RegularityConstants;

    fn name(&self) -> &str {
        "custom"
    }
}

type DriftFn = dyn Fn(f64, &[f64], &MeasureView<'_>, &mut [f64]) + Send + Sync;
type InitFn = dyn Fn(&mut dyn RngCore, &mut [f64]) + Send + Sync;

/// A [`Model`] assembled from closures, for ad-hoc drifts.
pub struct ClosureModel {
    dim: usize,
    bm_dim: usize,
    drift: Box<DriftFn>,
    diffusion: Box<DriftFn>,
    initial: Box<InitFn>,
    constants: RegularityConstants,
}

impl ClosureModel {
    /// Zero drift, zero diffusion, `X_0 = 0`, all constants zero.
    pub fn new(dim: usize, bm_dim: usize) -> Self {
        assert!(dim >= 1 && bm_dim >= 1, "dimensions must be positive");
        Self {
            dim,
            bm_dim,
            drift: Box::new(|_, _, _, out| out.fill(0.0)),
            diffusion: Box::new(|_, _, _, out| out.fill(0.0)),
            initial: Box::new(|_, out| out.fill(0.0)),
            constants: RegularityConstants {
                lipschitz_onesided: 0.0,
                lipschitz_diffusion: 0.0,
                poly_growth_q: 1.0,
                monotone_alpha: 0.0,
                monotone_beta: 0.0,
            },
        }
    }

    pub fn with_drift(
        mut self,
        f: impl Fn(f64, &[f64], &MeasureView<'_>, &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        self.drift = Box::new(f);
        self
    }

    pub fn with_diffusion(
        mut self,
        f: impl Fn(f64, &[f64], &MeasureView<'_>, &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        self.diffusion = Box::new(f);
        self
    }

    pub fn with_initial(
        mut self,
        f: impl Fn(&mut dyn RngCore, &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        self.initial = Box::new(f);
        self
    }

    /// Deterministic initial condition.
    pub fn with_initial_point(self, x0: Vec<f64>) -> Self {
        self.with_initial(move |_, out| out.copy_from_slice(&x0))
    }

    pub fn with_constants(mut self, constants: RegularityConstants) -> Self {
        self.constants = constants;
        self
    }
}

impl Model for ClosureModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn bm_dim(&self) -> usize {
        self.bm_dim
    }

    fn drift(&self, t: f64, x: &[f64], mu: &MeasureView<'_>, out: &mut [f64]) {
        (self.drift)(t, x, mu, out)
    }

    fn diffusion(&self, t: f64, x: &[f64], mu: &MeasureView<'_>, out: &mut [f64]) {
        (self.diffusion)(t, x, mu, out)
    }

    fn sample_initial(&self, rng: &mut dyn RngCore, out: &mut [f64]) {
        (self.initial)(rng, out)
    }

    fn constants(&self) -> RegularityConstants {
        self.constants
    }
}

/// Outcome of a randomized probe of the declared one-sided Lipschitz constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub n_probes: usize,
    /// Largest observed `<x - x', b(x) - b(x')> / |x - x'|^2`.
    pub max_ratio: f64,
    pub declared: f64,
    /// Count of probes where drift or diffusion returned a non-finite value.
    pub non_finite: usize,
    pub warnings: Vec<String>,
}

/// Half-width of the box `[-R, R]^d` that probe points are drawn from.
pub const PROBE_RADIUS: f64 = 10.0;
/// Horizon over which probe times are drawn.
pub const PROBE_HORIZON: f64 = 1.0;
const PROBE_CLOUD: usize = 16;
const PROBE_TOLERANCE: f64 = 0.05;

/// Randomized probe of the one-sided Lipschitz condition. Points `x, x'`
/// and a 16-particle cloud for `mu` are drawn uniformly from
/// `[-10, 10]^d`, times from `[0, 1]`, and both drift evaluations share the
/// same `mu`. The report warns when the observed ratio exceeds the declared
/// constant by more than 5% of its magnitude; it is never an error.
pub fn validate_model<M: Model + ?Sized>(model: &M, n_probes: usize, seed: u64) -> ProbeReport {
    let d = model.dim();
    let l = model.bm_dim();
    let declared = model.constants().lipschitz_onesided;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |out: &mut [f64]| {
        out.iter_mut()
            .for_each(|v| *v = rng.random_range(-PROBE_RADIUS..=PROBE_RADIUS));
    };

    let mut x = vec![0.0; d];
    let mut xp = vec![0.0; d];
    let mut cloud = vec![0.0; PROBE_CLOUD * d];
    let mut bx = vec![0.0; d];
    let mut bxp = vec![0.0; d];
    let mut sigma = vec![0.0; d * l];
    let mut max_ratio = f64::NEG_INFINITY;
    let mut non_finite = 0;

    for probe in 0..n_probes.max(1) {
        draw(&mut x);
        draw(&mut xp);
        draw(&mut cloud);
        let t = PROBE_HORIZON * (probe as f64 + 0.5) / n_probes.max(1) as f64;
        let mu = MeasureView::new(&cloud, d).expect("probe cloud is non-empty");
        model.drift(t, &x, &mu, &mut bx);
        model.drift(t, &xp, &mu, &mut bxp);
        model.diffusion(t, &x, &mu, &mut sigma);
        if bx.iter().chain(&bxp).chain(&sigma).any(|v| !v.is_finite()) {
            non_finite += 1;
            continue;
        }
        let dist2: f64 = x.iter().zip(&xp).map(|(a, b)| (a - b) * (a - b)).sum();
        if dist2 == 0.0 {
            continue;
        }
        let inner: f64 = x
            .iter()
            .zip(&xp)
            .zip(bx.iter().zip(&bxp))
            .map(|((a, b), (fa, fb))| (a - b) * (fa - fb))
            .sum();
        max_ratio = max_ratio.max(inner / dist2);
    }

    let mut warnings = Vec::new();
    if max_ratio > declared + PROBE_TOLERANCE * declared.abs() {
        warnings.push(format!(
            "observed one-sided ratio {max_ratio:.6} exceeds declared L_b = {declared}"
        ));
    }
    if non_finite > 0 {
        warnings.push(format!("{non_finite} probes produced non-finite coefficients"));
    }
    ProbeReport {
        n_probes,
        max_ratio,
        declared,
        non_finite,
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(rate: f64) -> ClosureModel {
        ClosureModel::new(1, 1)
            .with_drift(move |_, x, _, out| out[0] = -rate * x[0])
            .with_constants(RegularityConstants {
                lipschitz_onesided: -rate,
                lipschitz_diffusion: 0.0,
                poly_growth_q: 1.0,
                monotone_alpha: 0.0,
                monotone_beta: -rate,
            })
    }

    #[test]
    fn linear_drift_ratio_is_exact() {
        let report = validate_model(&linear(1.0), 500, 1);
        assert!(report.max_ratio <= -1.0 + 1e-9, "{}", report.max_ratio);
        assert!(report.max_ratio >= -1.0 - 1e-9);
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn zero_drift_ratio_is_zero() {
        let report = validate_model(&ClosureModel::new(2, 1), 100, 2);
        assert_eq!(report.max_ratio, 0.0);
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn understated_constant_is_flagged_not_fatal() {
        let model = ClosureModel::new(1, 1).with_drift(|_, x, _, out| out[0] = 2.0 * x[0]);
        let report = validate_model(&model, 50, 3);
        assert!((report.max_ratio - 2.0).abs() < 1e-9);
        assert_eq!(report.warnings.len(), 1);
    }

    #[test]
    fn non_finite_coefficients_are_counted() {
        let model = ClosureModel::new(1, 1).with_drift(|_, _, _, out| out[0] = f64::NAN);
        let report = validate_model(&model, 10, 4);
        assert_eq!(report.non_finite, 10);
    }

    #[test]
    fn default_diffuse_is_matrix_product() {
        let model = ClosureModel::new(2, 3).with_diffusion(|_, _, _, out| {
            out.copy_from_slice(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        });
        let cloud = [0.0, 0.0];
        let mu = MeasureView::new(&cloud, 2).unwrap();
        let mut out = [0.0; 2];
        model.diffuse(0.0, &[0.0, 0.0], &mu, &[1.0, 0.0, -1.0], &mut out);
        assert_eq!(out, [-2.0, -2.0]);
    }

    #[test]
    fn implicit_step_bound() {
        let mut c = linear(1.0).constants();
        assert_eq!(c.implicit_step_bound(), f64::INFINITY);
        c.lipschitz_onesided = 1.625;
        c.monotone_beta = 0.25;
        assert_eq!(c.implicit_step_bound(), 1.0 / 1.625);
        c.monotone_beta = 2.0;
        assert_eq!(c.implicit_step_bound(), 0.25);
    }
}
