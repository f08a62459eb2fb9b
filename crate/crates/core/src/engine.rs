//! Step loop, snapshotting, divergence detection and timing.
//!
//! Several schemes or resolutions can be driven by one Brownian path: the
//! increments are drawn at the finest resolution and each coarser level
//! consumes running sums of the fine increments it spans.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::config::{SchemeConfig, SchemeKind};
use crate::error::{Error, Result};
use crate::measure::MeasureView;
use crate::model::Model;
use crate::rng::{initial_stream, ParticleStreams};
use crate::schemes::{self, euclidean_norm};

pub const DEFAULT_DIVERGENCE_THRESHOLD: f64 = 1e8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationRun {
    pub scheme: SchemeConfig,
    pub n_particles: usize,
    pub master_seed: u64,
    /// Store the full cloud every `snapshot_stride` steps; 0 keeps only the
    /// initial and final clouds.
    pub snapshot_stride: usize,
    pub divergence_threshold: f64,
}

impl Default for SimulationRun {
    fn default() -> Self {
        Self {
            scheme: SchemeConfig::default(),
            n_particles: 1000,
            master_seed: 0,
            snapshot_stride: 0,
            divergence_threshold: DEFAULT_DIVERGENCE_THRESHOLD,
        }
    }
}

impl SimulationRun {
    pub fn with_scheme(&self, scheme: SchemeConfig) -> Self {
        Self {
            scheme,
            ..self.clone()
        }
    }

    pub fn with_seed(&self, master_seed: u64) -> Self {
        Self {
            master_seed,
            ..self.clone()
        }
    }

    fn validate_common(&self) -> Result<()> {
        if self.n_particles == 0 {
            return Err(Error::config("n_particles must be at least 1"));
        }
        if !(self.divergence_threshold > 0.0) {
            return Err(Error::config("divergence_threshold must be positive"));
        }
        Ok(())
    }
}

/// Summary of the empirical measure at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalStats {
    pub step: usize,
    pub time: f64,
    pub mean: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub diverged_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub positions: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub scheme: SchemeConfig,
    pub dim: usize,
    pub n_particles: usize,
    /// Cloud at the last completed step (`N x d`, row-major).
    pub final_positions: Vec<f64>,
    pub stats: Vec<EmpiricalStats>,
    pub snapshots: Vec<Snapshot>,
    pub diverged: bool,
    pub first_divergence_step: Option<usize>,
    /// First step at which more than half of the particles had diverged.
    pub majority_divergence_step: Option<usize>,
    /// Sticky per-particle divergence flags.
    pub divergence_flags: Vec<bool>,
    /// Set when a tamed or implicit run stopped early after diverging.
    pub halted_at: Option<usize>,
    /// Time spent drawing increments and stepping this run, excluding I/O.
    pub elapsed: Duration,
}

impl SimulationResult {
    pub fn steps_completed(&self) -> usize {
        self.stats.last().map_or(0, |s| s.step)
    }

    /// Steps between the first single-particle divergence and majority
    /// divergence.
    pub fn corruption_lag(&self) -> Option<usize> {
        Some(self.majority_divergence_step? - self.first_divergence_step?)
    }

    pub fn particle(&self, i: usize) -> &[f64] {
        &self.final_positions[i * self.dim..(i + 1) * self.dim]
    }
}

struct Level {
    scheme: SchemeConfig,
    ratio: usize,
    positions: Vec<f64>,
    next: Vec<f64>,
    increment: Vec<f64>,
    /// Moments of `positions`, reused as the frozen measure of the next step.
    mean: Vec<f64>,
    second_moment: Vec<f64>,
    stats: Vec<EmpiricalStats>,
    snapshots: Vec<Snapshot>,
    flags: Vec<bool>,
    diverged_count: usize,
    first_divergence_step: Option<usize>,
    majority_divergence_step: Option<usize>,
    halted_at: Option<usize>,
    step: usize,
    elapsed: Duration,
}

impl Level {
    fn record(&mut self, dim: usize, stride: usize) {
        let grid_time = |k: usize| {
            if k == self.scheme.n_steps {
                self.scheme.horizon
            } else {
                k as f64 * self.scheme.step_size()
            }
        };
        let view = MeasureView::new(&self.positions, dim).expect("cloud is non-empty");
        self.mean.clear();
        self.mean.extend_from_slice(view.mean());
        self.second_moment.clear();
        self.second_moment.extend_from_slice(view.second_moment());
        self.stats.push(EmpiricalStats {
            step: self.step,
            time: grid_time(self.step),
            mean: view.mean().to_vec(),
            second_moment: view.second_moment().to_vec(),
            diverged_count: self.diverged_count,
        });
        let last = self.step == self.scheme.n_steps;
        let keep = if stride == 0 {
            self.step == 0 || last
        } else {
            self.step % stride == 0 || last
        };
        if keep {
            self.snapshots.push(Snapshot {
                step: self.step,
                time: grid_time(self.step),
                positions: self.positions.clone(),
            });
        }
    }

    fn update_divergence(&mut self, dim: usize, threshold: f64) {
        let n = self.flags.len();
        for (flag, x) in self.flags.iter_mut().zip(self.positions.chunks(dim)) {
            if !*flag {
                let norm = euclidean_norm(x);
                if !(norm.is_finite() && norm <= threshold) {
                    *flag = true;
                    self.diverged_count += 1;
                }
            }
        }
        if self.diverged_count > 0 && self.first_divergence_step.is_none() {
            self.first_divergence_step = Some(self.step);
        }
        if 2 * self.diverged_count > n && self.majority_divergence_step.is_none() {
            self.majority_divergence_step = Some(self.step);
        }
    }

    fn finish(self, dim: usize) -> SimulationResult {
        // The last snapshot of a halted run is its final state.
        let mut snapshots = self.snapshots;
        if self.halted_at.is_some() && snapshots.last().map(|s| s.step) != Some(self.step) {
            snapshots.push(Snapshot {
                step: self.step,
                time: self.stats.last().map_or(0.0, |s| s.time),
                positions: self.positions.clone(),
            });
        }
        SimulationResult {
            n_particles: self.flags.len(),
            scheme: self.scheme,
            dim,
            final_positions: self.positions,
            stats: self.stats,
            snapshots,
            diverged: self.first_divergence_step.is_some(),
            first_divergence_step: self.first_divergence_step,
            majority_divergence_step: self.majority_divergence_step,
            divergence_flags: self.flags,
            halted_at: self.halted_at,
            elapsed: self.elapsed,
        }
    }
}

/// Initial cloud: particle `i` is drawn from its own seed-derived stream.
pub fn initial_positions<M: Model + ?Sized>(model: &M, master_seed: u64, n: usize) -> Vec<f64> {
    let d = model.dim();
    let mut positions = vec![0.0; n * d];
    for (i, x) in positions.chunks_mut(d).enumerate() {
        let mut rng = initial_stream(master_seed, i);
        model.sample_initial(&mut rng, x);
    }
    positions
}

/// Run `levels` on one shared Brownian path and initial cloud. Every level
/// must share the horizon and its step count must divide the finest one.
/// `run.scheme` is ignored in favour of the level configurations.
pub fn simulate_coupled<M: Model + ?Sized>(
    model: &M,
    run: &SimulationRun,
    levels: &[SchemeConfig],
) -> Result<Vec<SimulationResult>> {
    run.validate_common()?;
    if levels.is_empty() {
        return Err(Error::config("at least one scheme is required"));
    }
    let constants = model.constants();
    for level in levels {
        level.validate(&constants)?;
    }
    let horizon = levels[0].horizon;
    if levels.iter().any(|l| l.horizon != horizon) {
        return Err(Error::config("coupled schemes must share the horizon"));
    }
    let fine_steps = levels.iter().map(|l| l.n_steps).max().unwrap_or(1);
    if let Some(bad) = levels.iter().find(|l| fine_steps % l.n_steps != 0) {
        return Err(Error::config(format!(
            "step counts are not nested: {} does not divide {fine_steps}",
            bad.n_steps
        )));
    }

    let (n, d, l) = (run.n_particles, model.dim(), model.bm_dim());
    let x0 = initial_positions(model, run.master_seed, n);
    let mut states: Vec<Level> = levels
        .iter()
        .map(|scheme| Level {
            scheme: scheme.clone(),
            ratio: fine_steps / scheme.n_steps,
            positions: x0.clone(),
            next: vec![0.0; n * d],
            increment: vec![0.0; n * l],
            mean: Vec::with_capacity(d),
            second_moment: Vec::with_capacity(d),
            stats: Vec::with_capacity(scheme.n_steps + 1),
            snapshots: Vec::new(),
            flags: vec![false; n],
            diverged_count: 0,
            first_divergence_step: None,
            majority_divergence_step: None,
            halted_at: None,
            step: 0,
            elapsed: Duration::ZERO,
        })
        .collect();
    for state in &mut states {
        state.update_divergence(d, run.divergence_threshold);
        state.record(d, run.snapshot_stride);
    }

    let fine_h = horizon / fine_steps as f64;
    let mut streams = ParticleStreams::new(run.master_seed, n, l);
    let mut dw = vec![0.0; n * l];

    for k in 0..fine_steps {
        if states.iter().all(|s| s.halted_at.is_some()) {
            break;
        }
        let drawn = Instant::now();
        streams.fill_increments(fine_h, &mut dw);
        let draw_time = drawn.elapsed();
        for state in states.iter_mut().filter(|s| s.halted_at.is_none()) {
            state.elapsed += draw_time;
            let phase = k % state.ratio;
            if state.ratio == 1 {
                state.increment.copy_from_slice(&dw);
            } else if phase == 0 {
                state.increment.copy_from_slice(&dw);
                continue;
            } else {
                state.increment.iter_mut().zip(&dw).for_each(|(a, b)| *a += b);
                if phase + 1 < state.ratio {
                    continue;
                }
            }

            let started = Instant::now();
            let t = state.step as f64 * state.scheme.step_size();
            let view = MeasureView::from_parts(
                &state.positions,
                d,
                state.mean.clone(),
                state.second_moment.clone(),
            );
            schemes::step(&state.scheme, model, &view, t, &state.increment, &mut state.next)
                .map_err(|failure| Error::NonConvergence {
                    step: state.step,
                    particle: failure.particle,
                    report: failure.report,
                })?;
            std::mem::swap(&mut state.positions, &mut state.next);
            state.step += 1;
            state.update_divergence(d, run.divergence_threshold);
            state.record(d, run.snapshot_stride);
            if state.diverged_count > 0 && state.scheme.kind != SchemeKind::StandardEuler {
                state.halted_at = Some(state.step);
            }
            state.elapsed += started.elapsed();
        }
    }

    Ok(states.into_iter().map(|s| s.finish(d)).collect())
}

/// Run a single simulation with increments drawn at its own resolution.
pub fn simulate<M: Model + ?Sized>(model: &M, run: &SimulationRun) -> Result<SimulationResult> {
    let mut results = simulate_coupled(model, run, std::slice::from_ref(&run.scheme))?;
    Ok(results.remove(0))
}

/// Two schemes driven by the same Brownian path, with per-particle terminal
/// distances `|X_T^a - X_T^b|`.
pub fn simulate_pathwise_pair<M: Model + ?Sized>(
    model: &M,
    run: &SimulationRun,
    scheme_a: &SchemeConfig,
    scheme_b: &SchemeConfig,
) -> Result<(SimulationResult, SimulationResult, Vec<f64>)> {
    let (fine, coarse) = if scheme_a.n_steps >= scheme_b.n_steps {
        (scheme_a.n_steps, scheme_b.n_steps)
    } else {
        (scheme_b.n_steps, scheme_a.n_steps)
    };
    if fine % coarse != 0 {
        return Err(Error::config(format!(
            "step counts {} and {} are not nested",
            scheme_a.n_steps, scheme_b.n_steps
        )));
    }
    let mut results = simulate_coupled(model, run, &[scheme_a.clone(), scheme_b.clone()])?;
    let b = results.pop().expect("two levels");
    let a = results.pop().expect("two levels");
    let d = model.dim();
    let diffs = a
        .final_positions
        .chunks(d)
        .zip(b.final_positions.chunks(d))
        .map(|(x, y)| {
            let delta: Vec<f64> = x.iter().zip(y).map(|(p, q)| p - q).collect();
            euclidean_norm(&delta)
        })
        .collect();
    Ok((a, b, diffs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ClosureModel;
    use crate::models::{ginzburg_landau, linear, GinzburgLandauParams, LinearParams};

    fn run(kind: SchemeKind, n: usize, m: usize, t: f64, seed: u64) -> SimulationRun {
        SimulationRun {
            scheme: SchemeConfig::new(kind, m, t),
            n_particles: n,
            master_seed: seed,
            ..SimulationRun::default()
        }
    }

    #[test]
    fn null_model_stays_put() {
        let model = ClosureModel::new(2, 1).with_initial_point(vec![0.5, -1.0]);
        for kind in [SchemeKind::StandardEuler, SchemeKind::TamedEuler, SchemeKind::ImplicitEuler] {
            let res = simulate(&model, &run(kind, 7, 9, 1.0, 3)).unwrap();
            assert!(!res.diverged);
            assert_eq!(res.stats.len(), 10);
            for x in res.final_positions.chunks(2) {
                assert_eq!(x, &[0.5, -1.0]);
            }
        }
    }

    #[test]
    fn stats_and_snapshots_shape() {
        let model = ginzburg_landau(GinzburgLandauParams::default());
        let mut r = run(SchemeKind::TamedEuler, 20, 10, 1.0, 1);
        r.snapshot_stride = 4;
        let res = simulate(&model, &r).unwrap();
        let steps: Vec<usize> = res.stats.iter().map(|s| s.step).collect();
        assert_eq!(steps, (0..=10).collect::<Vec<_>>());
        assert_eq!(res.stats[10].time, 1.0);
        let snaps: Vec<usize> = res.snapshots.iter().map(|s| s.step).collect();
        assert_eq!(snaps, vec![0, 4, 8, 10]);
        r.snapshot_stride = 0;
        let res = simulate(&model, &r).unwrap();
        assert_eq!(res.snapshots.iter().map(|s| s.step).collect::<Vec<_>>(), vec![0, 10]);
        assert_eq!(res.stats[0].mean, vec![1.0]);
    }

    #[test]
    fn tamed_ginzburg_landau_stays_bounded() {
        let model = ginzburg_landau(GinzburgLandauParams::default());
        let res = simulate(&model, &run(SchemeKind::TamedEuler, 1000, 40, 2.0, 2024)).unwrap();
        assert!(!res.diverged);
        // At h = 0.05 the tamed drift caps the restoring force at sqrt(M),
        // so a few particles make long excursions; the bulk stays put.
        let mut abs: Vec<f64> = res.final_positions.iter().map(|x| x.abs()).collect();
        abs.sort_by(f64::total_cmp);
        assert!(abs.iter().all(|x| x.is_finite()));
        assert!(abs[989] < 10.0, "99th percentile of |X_T| = {}", abs[989]);
    }

    #[test]
    fn identical_schemes_have_zero_pathwise_error() {
        let model = ginzburg_landau(GinzburgLandauParams::default());
        let r = run(SchemeKind::TamedEuler, 50, 32, 1.0, 5);
        let (a, b, diffs) = simulate_pathwise_pair(&model, &r, &r.scheme, &r.scheme).unwrap();
        assert!(diffs.iter().all(|&e| e == 0.0));
        assert_eq!(a.final_positions, b.final_positions);
    }

    #[test]
    fn finest_level_matches_standalone_run() {
        let model = ginzburg_landau(GinzburgLandauParams::default());
        let r = run(SchemeKind::TamedEuler, 64, 32, 1.0, 8);
        let alone = simulate(&model, &r).unwrap();
        let coarse = r.scheme.with_steps(8);
        let (fine, _, _) = simulate_pathwise_pair(&model, &r, &r.scheme, &coarse).unwrap();
        assert_eq!(alone.final_positions, fine.final_positions);
    }

    #[test]
    fn pure_brownian_paths_coincide_across_resolutions() {
        // b = 0, sigma = 1: X_T = X_0 + W_T whatever the grid, and the
        // coarse sums reproduce the fine path at shared grid points.
        let model = ClosureModel::new(1, 1).with_diffusion(|_, _, _, out| out[0] = 1.0);
        let mut r = run(SchemeKind::StandardEuler, 30, 16, 1.0, 9);
        r.snapshot_stride = 1;
        let coarse = r.scheme.with_steps(8);
        let (fine, coarse, diffs) = simulate_pathwise_pair(&model, &r, &r.scheme, &coarse).unwrap();
        assert!(diffs.iter().all(|&e| e < 1e-14));
        for k in 0..=8 {
            let f = &fine.snapshots[2 * k].positions;
            let c = &coarse.snapshots[k].positions;
            for (a, b) in f.iter().zip(c) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn coarse_increment_is_sum_of_fine_increments() {
        let model = ClosureModel::new(1, 1).with_diffusion(|_, _, _, out| out[0] = 1.0);
        let mut r = run(SchemeKind::StandardEuler, 5, 2, 1.0, 21);
        r.snapshot_stride = 1;
        let coarse = r.scheme.with_steps(1);
        let (fine, coarse, _) = simulate_pathwise_pair(&model, &r, &r.scheme, &coarse).unwrap();
        let mut streams = ParticleStreams::new(21, 5, 1);
        let mut dw1 = vec![0.0; 5];
        let mut dw2 = vec![0.0; 5];
        streams.fill_increments(0.5, &mut dw1);
        streams.fill_increments(0.5, &mut dw2);
        for i in 0..5 {
            assert_eq!(fine.snapshots[1].positions[i], dw1[i]);
            assert_eq!(coarse.final_positions[i], dw1[i] + dw2[i]);
        }
    }

    #[test]
    fn non_nested_levels_are_rejected() {
        let model = ClosureModel::new(1, 1);
        let r = run(SchemeKind::TamedEuler, 5, 6, 1.0, 0);
        let other = r.scheme.with_steps(4);
        assert!(matches!(
            simulate_pathwise_pair(&model, &r, &r.scheme, &other),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn refinement_reduces_pathwise_error() {
        let model = linear(LinearParams {
            rate: 1.0,
            additive: 0.0,
            multiplicative: 0.1,
            x0: 1.0,
        });
        let r = run(SchemeKind::TamedEuler, 100, 8, 1.0, 33);
        let rmse = |coarse: usize| {
            let (_, _, d) = simulate_pathwise_pair(&model, &r, &r.scheme, &r.scheme.with_steps(coarse)).unwrap();
            (d.iter().map(|e| e * e).sum::<f64>() / d.len() as f64).sqrt()
        };
        let (e4, e2) = (rmse(4), rmse(2));
        assert!(e4 > 0.0 && e4 < e2, "M=4: {e4}, M=2: {e2}");
    }

    #[test]
    fn divergence_is_detected_and_halts_tamed_runs() {
        // Explosive linear drift b = 50 x crosses the threshold quickly.
        let model = ClosureModel::new(1, 1)
            .with_drift(|_, x, _, out| out[0] = 50.0 * x[0])
            .with_initial_point(vec![1.0]);
        let mut r = run(SchemeKind::StandardEuler, 3, 100, 10.0, 0);
        r.divergence_threshold = 1e6;
        let res = simulate(&model, &r).unwrap();
        assert!(res.diverged);
        assert_eq!(res.steps_completed(), 100);
        assert!(res.halted_at.is_none());
        assert!(res.divergence_flags.iter().all(|&f| f));

        // The tamed drift grows by at most M^alpha * h = 1 per step.
        r.scheme.kind = SchemeKind::TamedEuler;
        r.divergence_threshold = 5.0;
        let res = simulate(&model, &r).unwrap();
        assert!(res.diverged);
        assert_eq!(res.halted_at, res.first_divergence_step);
        assert!(res.steps_completed() < 100);
    }

    #[test]
    fn implicit_failure_propagates_step_and_particle() {
        let model = ClosureModel::new(1, 1)
            .with_drift(|_, x, _, out| out[0] = x[0] * x[0] * x[0])
            .with_initial_point(vec![-10.0]);
        let mut scheme = SchemeConfig::new(SchemeKind::ImplicitEuler, 1, 1.0);
        scheme.solver_max_iter = 3;
        let r = SimulationRun {
            scheme,
            n_particles: 2,
            ..SimulationRun::default()
        };
        match simulate(&model, &r) {
            Err(Error::NonConvergence { step, particle, .. }) => {
                assert_eq!((step, particle), (0, 0));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn implicit_guard_is_enforced() {
        let model = ginzburg_landau(GinzburgLandauParams::default());
        let r = run(SchemeKind::ImplicitEuler, 10, 1, 1.0, 0);
        assert!(matches!(simulate(&model, &r), Err(Error::InvalidConfig(_))));
    }
}
