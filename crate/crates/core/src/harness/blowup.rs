use serde::{Deserialize, Serialize};

use crate::config::{SchemeConfig, SchemeKind};
use crate::engine::{simulate, SimulationRun, DEFAULT_DIVERGENCE_THRESHOLD};
use crate::error::{Error, Result};
use crate::model::Model;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BlowupSpec {
    pub scheme: SchemeKind,
    pub step_size: f64,
    pub horizon: f64,
    pub particle_counts: Vec<usize>,
    pub repetitions: usize,
    pub seed_base: u64,
    pub divergence_threshold: f64,
}

impl Default for BlowupSpec {
    fn default() -> Self {
        Self {
            scheme: SchemeKind::StandardEuler,
            step_size: 0.05,
            horizon: 2.0,
            particle_counts: vec![1000, 5000, 20000],
            repetitions: 200,
            seed_base: 0,
            divergence_threshold: DEFAULT_DIVERGENCE_THRESHOLD,
        }
    }
}

impl BlowupSpec {
    /// Seed of repetition `rep` at particle count `n`. Each particle count
    /// gets its own block of seeds so the repetitions are independent
    /// across rows.
    pub fn seed(&self, n: usize, rep: usize) -> u64 {
        self.seed_base
            .wrapping_add((n as u64) << 32)
            .wrapping_add(rep as u64)
    }

    fn scheme_config(&self) -> Result<SchemeConfig> {
        let grid = crate::grid::TimeGrid::from_step(self.step_size, self.horizon)?;
        Ok(SchemeConfig::new(self.scheme, grid.n_steps(), self.horizon))
    }
}

/// One diverged repetition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupRun {
    pub n_particles: usize,
    pub repetition: usize,
    pub seed: u64,
    pub first_divergence_step: usize,
    pub majority_divergence_step: Option<usize>,
    /// Steps from the first divergent particle to majority divergence.
    pub corruption_lag: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupStudy {
    pub model: String,
    pub scheme: SchemeKind,
    pub step_size: f64,
    pub horizon: f64,
    pub repetitions: usize,
    pub particle_counts: Vec<usize>,
    pub counts: Vec<usize>,
    pub diverged_runs: Vec<BlowupRun>,
}

impl BlowupStudy {
    pub fn is_monotone(&self) -> bool {
        self.counts.windows(2).all(|w| w[0] <= w[1])
    }
}

/// Count diverging repetitions at each particle count.
pub fn blowup_frequency<M: Model + ?Sized>(model: &M, spec: &BlowupSpec) -> Result<BlowupStudy> {
    if spec.repetitions == 0 || spec.particle_counts.is_empty() {
        return Err(Error::config("repetitions and particle_counts must be non-empty"));
    }
    let scheme = spec.scheme_config()?;
    let mut counts = Vec::with_capacity(spec.particle_counts.len());
    let mut diverged_runs = Vec::new();
    for &n in &spec.particle_counts {
        let mut count = 0;
        for rep in 0..spec.repetitions {
            let seed = spec.seed(n, rep);
            let run = SimulationRun {
                scheme: scheme.clone(),
                n_particles: n,
                master_seed: seed,
                snapshot_stride: 0,
                divergence_threshold: spec.divergence_threshold,
            };
            let res = simulate(model, &run)?;
            if let Some(first) = res.first_divergence_step {
                count += 1;
                diverged_runs.push(BlowupRun {
                    n_particles: n,
                    repetition: rep,
                    seed,
                    first_divergence_step: first,
                    majority_divergence_step: res.majority_divergence_step,
                    corruption_lag: res.corruption_lag(),
                });
            }
        }
        counts.push(count);
    }
    Ok(BlowupStudy {
        model: model.name().to_string(),
        scheme: spec.scheme,
        step_size: spec.step_size,
        horizon: spec.horizon,
        repetitions: spec.repetitions,
        particle_counts: spec.particle_counts.clone(),
        counts,
        diverged_runs,
    })
}
