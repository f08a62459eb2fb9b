//! One time step of each particle scheme.
//!
//! Every step reads the frozen pre-step [`MeasureView`] and a precomputed
//! `N x l` block of Brownian increments, and writes the `N x d` post-step
//! cloud into a separate buffer. Particles are updated independently, so
//! the work is a parallel map whose result does not depend on scheduling.

mod implicit;
mod taming;

pub use implicit::{solve_implicit_point, ImplicitSolveReport, ImplicitSolver, NonConvergence};
pub use taming::{euclidean_norm, tame_drift, tame_in_place, taming_factor};

use rayon::prelude::*;

use crate::config::{SchemeConfig, SchemeKind};
use crate::measure::MeasureView;
use crate::model::Model;
use crate::rng::MIN_PARTICLES_PER_TASK;

/// First particle (by index) whose implicit solve failed in a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleFailure {
    pub particle: usize,
    pub report: ImplicitSolveReport,
}

struct Scratch {
    drift: Vec<f64>,
    noise: Vec<f64>,
}

impl Scratch {
    fn new(d: usize) -> Self {
        Self {
            drift: vec![0.0; d],
            noise: vec![0.0; d],
        }
    }
}

fn check_shapes<M: Model + ?Sized>(model: &M, mu: &MeasureView<'_>, dw: &[f64], out: &[f64]) {
    assert_eq!(mu.dim(), model.dim(), "cloud dimension differs from model");
    assert_eq!(out.len(), mu.positions().len(), "output buffer has wrong size");
    assert_eq!(dw.len(), mu.len() * model.bm_dim(), "increment buffer has wrong size");
}

/// Explicit Euler step with the drift passed through `transform`.
fn explicit_step<M, F>(model: &M, mu: &MeasureView<'_>, t: f64, h: f64, dw: &[f64], out: &mut [f64], transform: F)
where
    M: Model + ?Sized,
    F: Fn(&mut [f64]) + Sync,
{
    check_shapes(model, mu, dw, out);
    let (d, l) = (model.dim(), model.bm_dim());
    out.par_chunks_mut(d)
        .zip(dw.par_chunks(l))
        .enumerate()
        .with_min_len(MIN_PARTICLES_PER_TASK)
        .for_each_init(
            || Scratch::new(d),
            |s, (i, (next, dw_i))| {
                let x = mu.particle(i);
                model.drift(t, x, mu, &mut s.drift);
                transform(&mut s.drift);
                model.diffuse(t, x, mu, dw_i, &mut s.noise);
                for k in 0..d {
                    next[k] = x[k] + s.drift[k] * h + s.noise[k];
                }
            },
        );
}

/// `X_{k+1} = X_k + b(t_k, X_k, mu_k) h + sigma(t_k, X_k, mu_k) dW_k`.
pub fn step_standard_euler<M: Model + ?Sized>(
    model: &M,
    mu: &MeasureView<'_>,
    t: f64,
    h: f64,
    dw: &[f64],
    out: &mut [f64],
) {
    explicit_step(model, mu, t, h, dw, out, |_| {});
}

/// As [`step_standard_euler`] with the drift replaced by
/// `b / (1 + M^(-alpha) |b|)`.
#[allow(clippy::too_many_arguments)]
pub fn step_tamed_euler<M: Model + ?Sized>(
    model: &M,
    mu: &MeasureView<'_>,
    t: f64,
    h: f64,
    n_steps: usize,
    alpha: f64,
    dw: &[f64],
    out: &mut [f64],
) {
    let factor = taming_factor(n_steps, alpha);
    explicit_step(model, mu, t, h, dw, out, |b| tame_in_place(b, factor));
}

/// Solves `X_{k+1} - b(t_k, X_{k+1}, mu_k) h = X_k + sigma(t_k, X_k, mu_k) dW_k`
/// for every particle. The measure stays frozen at `mu_k`, so the solves are
/// independent. Returns the worst iteration count on success.
#[allow(clippy::too_many_arguments)]
pub fn step_implicit_euler<M: Model + ?Sized>(
    model: &M,
    mu: &MeasureView<'_>,
    t: f64,
    h: f64,
    tol: f64,
    max_iter: usize,
    dw: &[f64],
    out: &mut [f64],
) -> Result<usize, ParticleFailure> {
    check_shapes(model, mu, dw, out);
    let (d, l) = (model.dim(), model.bm_dim());
    let reports: Vec<ImplicitSolveReport> = out
        .par_chunks_mut(d)
        .zip(dw.par_chunks(l))
        .enumerate()
        .with_min_len(MIN_PARTICLES_PER_TASK)
        .map_init(
            || (ImplicitSolver::new(d), Scratch::new(d)),
            |(solver, s), (i, (next, dw_i))| {
                let x = mu.particle(i);
                model.diffuse(t, x, mu, dw_i, &mut s.noise);
                for k in 0..d {
                    s.drift[k] = x[k] + s.noise[k];
                }
                solver.solve(model, t, &s.drift, mu, h, tol, max_iter, next)
            },
        )
        .collect();
    match reports.iter().position(|r| !r.converged) {
        Some(particle) => Err(ParticleFailure {
            particle,
            report: reports[particle],
        }),
        None => Ok(reports.iter().map(|r| r.iterations).max().unwrap_or(0)),
    }
}

/// Dispatch one step of the configured scheme. The taming level `M` is the
/// configuration's own step count.
pub fn step<M: Model + ?Sized>(
    config: &SchemeConfig,
    model: &M,
    mu: &MeasureView<'_>,
    t: f64,
    dw: &[f64],
    out: &mut [f64],
) -> Result<(), ParticleFailure> {
    let h = config.step_size();
    match config.kind {
        SchemeKind::StandardEuler => step_standard_euler(model, mu, t, h, dw, out),
        SchemeKind::TamedEuler => {
            step_tamed_euler(model, mu, t, h, config.n_steps, config.taming_alpha, dw, out)
        }
        SchemeKind::ImplicitEuler => {
            step_implicit_euler(
                model,
                mu,
                t,
                h,
                config.solver_tol,
                config.solver_max_iter,
                dw,
                out,
            )?;
        }
    }
    Ok(())
}
