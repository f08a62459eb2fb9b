use serde::{Deserialize, Serialize};

use crate::config::{SchemeConfig, SchemeKind};
use crate::engine::{simulate_coupled, SimulationRun, DEFAULT_DIVERGENCE_THRESHOLD};
use crate::error::{Error, Result};
use crate::model::Model;

use super::loglog_fit;

/// Points closer to the proxy than this multiple of its self-error are left
/// out of the rate fit.
pub const PROXY_FLOOR_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergenceSpec {
    /// Scheme under test; `n_steps` is ignored.
    pub scheme: SchemeConfig,
    pub step_counts: Vec<usize>,
    pub proxy_steps: usize,
    pub proxy_kind: SchemeKind,
    pub n_particles: usize,
    pub n_seed_batches: usize,
    pub seed_base: u64,
    pub divergence_threshold: f64,
}

impl Default for ConvergenceSpec {
    fn default() -> Self {
        Self {
            scheme: SchemeConfig {
                horizon: 1.0,
                ..SchemeConfig::default()
            },
            step_counts: (2..=10).map(|k| 1 << k).collect(),
            proxy_steps: 1 << 14,
            proxy_kind: SchemeKind::TamedEuler,
            n_particles: 256,
            n_seed_batches: 8,
            seed_base: 0,
            divergence_threshold: DEFAULT_DIVERGENCE_THRESHOLD,
        }
    }
}

impl ConvergenceSpec {
    fn validate(&self) -> Result<()> {
        if self.step_counts.is_empty() {
            return Err(Error::config("step_counts must not be empty"));
        }
        if self.proxy_steps < 2 || self.proxy_steps % 2 != 0 {
            return Err(Error::config("proxy_steps must be even and at least 2"));
        }
        if let Some(m) = self
            .step_counts
            .iter()
            .find(|&&m| m == 0 || self.proxy_steps % m != 0)
        {
            return Err(Error::config(format!(
                "step count {m} does not divide proxy_steps {}",
                self.proxy_steps
            )));
        }
        if self.n_seed_batches == 0 || self.n_particles == 0 {
            return Err(Error::config("n_particles and n_seed_batches must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergencePoint {
    pub n_steps: usize,
    pub step_size: f64,
    pub rmse: f64,
    /// Mean stepping time per seed batch, in seconds.
    pub runtime_secs: f64,
    pub in_fit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceStudy {
    pub model: String,
    pub scheme: SchemeKind,
    pub proxy_kind: SchemeKind,
    pub proxy_steps: usize,
    pub n_particles: usize,
    pub n_seed_batches: usize,
    pub points: Vec<ConvergencePoint>,
    /// RMSE between the proxy and the same scheme at half its resolution.
    pub proxy_self_error: f64,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub fit_residual: Option<f64>,
}

/// Strong error of `spec.scheme` at each step count against a fine proxy
/// sharing the Brownian path, and the least-squares slope of
/// `log RMSE` against `log h`.
pub fn strong_rate<M: Model + ?Sized>(model: &M, spec: &ConvergenceSpec) -> Result<ConvergenceStudy> {
    spec.validate()?;
    let proxy = SchemeConfig {
        kind: spec.proxy_kind,
        n_steps: spec.proxy_steps,
        ..spec.scheme.clone()
    };
    let mut levels = vec![proxy.clone(), proxy.with_steps(spec.proxy_steps / 2)];
    levels.extend(spec.step_counts.iter().map(|&m| spec.scheme.with_steps(m)));

    let n_levels = levels.len();
    let mut sq_err = vec![0.0; n_levels];
    let mut seconds = vec![0.0; n_levels];
    for batch in 0..spec.n_seed_batches {
        let seed = spec.seed_base.wrapping_add(batch as u64);
        let run = SimulationRun {
            scheme: proxy.clone(),
            n_particles: spec.n_particles,
            master_seed: seed,
            snapshot_stride: 0,
            divergence_threshold: spec.divergence_threshold,
        };
        let results = simulate_coupled(model, &run, &levels)?;
        for res in &results {
            if res.diverged {
                return Err(Error::Diverged {
                    n_steps: res.scheme.n_steps,
                    seed,
                    step: res.first_divergence_step.unwrap_or(0),
                });
            }
        }
        let reference = &results[0].final_positions;
        for (j, res) in results.iter().enumerate() {
            sq_err[j] += reference
                .iter()
                .zip(&res.final_positions)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>();
            seconds[j] += res.elapsed.as_secs_f64();
        }
    }
    let samples = (spec.n_particles * spec.n_seed_batches) as f64;
    let rmse: Vec<f64> = sq_err.iter().map(|s| (s / samples).sqrt()).collect();
    let proxy_self_error = rmse[1];

    let points: Vec<ConvergencePoint> = spec
        .step_counts
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let e = rmse[i + 2];
            ConvergencePoint {
                n_steps: m,
                step_size: spec.scheme.horizon / m as f64,
                rmse: e,
                runtime_secs: seconds[i + 2] / spec.n_seed_batches as f64,
                in_fit: e > 0.0 && e >= PROXY_FLOOR_FACTOR * proxy_self_error,
            }
        })
        .collect();
    let (hs, es): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|p| p.in_fit)
        .map(|p| (p.step_size, p.rmse))
        .unzip();
    let fit = loglog_fit(&hs, &es);

    Ok(ConvergenceStudy {
        model: model.name().to_string(),
        scheme: spec.scheme.kind,
        proxy_kind: spec.proxy_kind,
        proxy_steps: spec.proxy_steps,
        n_particles: spec.n_particles,
        n_seed_batches: spec.n_seed_batches,
        points,
        proxy_self_error,
        slope: fit.map(|f| f.slope),
        intercept: fit.map(|f| f.intercept),
        fit_residual: fit.map(|f| f.residual),
    })
}
