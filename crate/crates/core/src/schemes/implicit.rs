//! Solver for the drift-implicit equation `x - h b(t, x, mu) = y`.
//!
//! Newton's method on `G(x) = x - h b(t,x,mu) - y` with a forward-difference
//! Jacobian, started from the explicit predictor `y + h b(t,y,mu)`. A Newton
//! step that fails to reduce `|G|` is replaced by a Picard step
//! `x <- x - lambda G(x)` (i.e. towards `y + h b(t,x,mu)`), halving `lambda`
//! until the residual decreases. For `h L_b < 1` the direction `-G` is a
//! descent direction of `|G|^2`, so the fallback always makes progress.

use serde::Serialize;

use crate::measure::MeasureView;
use crate::model::Model;
use crate::schemes::taming::euclidean_norm;

const MAX_HALVINGS: usize = 60;

/// Diagnostics from one implicit solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImplicitSolveReport {
    pub iterations: usize,
    /// Final `|x - h b(t,x,mu) - y|`.
    pub residual: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("implicit solve stalled at residual {:.3e} after {} iterations", .0.residual, .0.iterations)]
pub struct NonConvergence(pub ImplicitSolveReport);

/// Reusable buffers for repeated solves in dimension `d`.
#[derive(Debug, Clone)]
pub struct ImplicitSolver {
    dim: usize,
    bx: Vec<f64>,
    g: Vec<f64>,
    cand: Vec<f64>,
    b_cand: Vec<f64>,
    g_cand: Vec<f64>,
    probe: Vec<f64>,
    b_probe: Vec<f64>,
    jac: Vec<f64>,
    rhs: Vec<f64>,
}

impl ImplicitSolver {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            bx: vec![0.0; dim],
            g: vec![0.0; dim],
            cand: vec![0.0; dim],
            b_cand: vec![0.0; dim],
            g_cand: vec![0.0; dim],
            probe: vec![0.0; dim],
            b_probe: vec![0.0; dim],
            jac: vec![0.0; dim * dim],
            rhs: vec![0.0; dim],
        }
    }

    /// Solve `x - h b(t,x,mu) = y`, writing the final iterate into `x`.
    #[allow(clippy::too_many_arguments)]
    pub fn solve<M: Model + ?Sized>(
        &mut self,
        model: &M,
        t: f64,
        y: &[f64],
        mu: &MeasureView<'_>,
        h: f64,
        tol: f64,
        max_iter: usize,
        x: &mut [f64],
    ) -> ImplicitSolveReport {
        let d = self.dim;
        debug_assert_eq!(y.len(), d);

        // Predictor.
        model.drift(t, y, mu, &mut self.bx);
        for k in 0..d {
            x[k] = y[k] + h * self.bx[k];
        }
        model.drift(t, x, mu, &mut self.bx);
        residual_into(x, &self.bx, y, h, &mut self.g);
        let mut r = euclidean_norm(&self.g);

        let mut iterations = 0;
        while !(r <= tol) && iterations < max_iter && r.is_finite() {
            iterations += 1;
            let mut accepted = false;

            if self.newton_direction(model, t, x, mu, h) {
                for k in 0..d {
                    self.cand[k] = x[k] - self.rhs[k];
                }
                let r_new = self.evaluate_candidate(model, t, y, mu, h);
                if r_new < r {
                    r = self.accept(x, r_new);
                    accepted = true;
                }
            }

            if !accepted {
                let mut lambda = 1.0;
                for _ in 0..MAX_HALVINGS {
                    for k in 0..d {
                        self.cand[k] = x[k] - lambda * self.g[k];
                    }
                    let r_new = self.evaluate_candidate(model, t, y, mu, h);
                    if r_new < r {
                        r = self.accept(x, r_new);
                        accepted = true;
                        break;
                    }
                    lambda *= 0.5;
                }
            }

            if !accepted {
                break;
            }
        }

        ImplicitSolveReport {
            iterations,
            residual: r,
            converged: r <= tol,
        }
    }

    /// Newton correction `J^{-1} G` into `rhs`, `J = I - h Db(t,x,mu)` by
    /// forward differences with step `sqrt(eps) (1 + |x_j|)`.
    fn newton_direction<M: Model + ?Sized>(
        &mut self,
        model: &M,
        t: f64,
        x: &[f64],
        mu: &MeasureView<'_>,
        h: f64,
    ) -> bool {
        let d = self.dim;
        let root_eps = f64::EPSILON.sqrt();
        self.probe.copy_from_slice(x);
        for j in 0..d {
            let delta = root_eps * (1.0 + x[j].abs());
            self.probe[j] = x[j] + delta;
            let actual = self.probe[j] - x[j];
            model.drift(t, &self.probe, mu, &mut self.b_probe);
            self.probe[j] = x[j];
            for i in 0..d {
                let db = (self.b_probe[i] - self.bx[i]) / actual;
                self.jac[i * d + j] = if i == j { 1.0 } else { 0.0 } - h * db;
            }
        }
        self.rhs.copy_from_slice(&self.g);
        solve_dense(&mut self.jac, &mut self.rhs, d)
    }

    fn evaluate_candidate<M: Model + ?Sized>(
        &mut self,
        model: &M,
        t: f64,
        y: &[f64],
        mu: &MeasureView<'_>,
        h: f64,
    ) -> f64 {
        model.drift(t, &self.cand, mu, &mut self.b_cand);
        residual_into(&self.cand, &self.b_cand, y, h, &mut self.g_cand);
        let r = euclidean_norm(&self.g_cand);
        if r.is_nan() {
            f64::INFINITY
        } else {
            r
        }
    }

    fn accept(&mut self, x: &mut [f64], r_new: f64) -> f64 {
        x.copy_from_slice(&self.cand);
        std::mem::swap(&mut self.bx, &mut self.b_cand);
        std::mem::swap(&mut self.g, &mut self.g_cand);
        r_new
    }
}

fn residual_into(x: &[f64], bx: &[f64], y: &[f64], h: f64, g: &mut [f64]) {
    for k in 0..x.len() {
        g[k] = x[k] - h * bx[k] - y[k];
    }
}

/// Gaussian elimination with partial pivoting on the row-major `n x n`
/// matrix `a`; the solution overwrites `b`. Returns `false` if singular.
pub(crate) fn solve_dense(a: &mut [f64], b: &mut [f64], n: usize) -> bool {
    if n == 1 {
        if a[0] == 0.0 || !a[0].is_finite() {
            return false;
        }
        b[0] /= a[0];
        return b[0].is_finite();
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
            .unwrap_or(col);
        let p = a[pivot * n + col];
        if p == 0.0 || !p.is_finite() {
            return false;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        for row in col + 1..n {
            let f = a[row * n + col] / p;
            if f != 0.0 {
                for k in col..n {
                    a[row * n + k] -= f * a[col * n + k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row * n + k] * b[k];
        }
        b[row] = s / a[row * n + row];
    }
    b.iter().all(|v| v.is_finite())
}

/// Solve `x - h b(t,x,mu) = y` from scratch.
#[allow(clippy::too_many_arguments)]
pub fn solve_implicit_point<M: Model + ?Sized>(
    t: f64,
    y: &[f64],
    mu: &MeasureView<'_>,
    model: &M,
    h: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, ImplicitSolveReport), NonConvergence> {
    let mut solver = ImplicitSolver::new(y.len());
    let mut x = vec![0.0; y.len()];
    let report = solver.solve(model, t, y, mu, h, tol, max_iter, &mut x);
    if report.converged {
        Ok((x, report))
    } else {
        Err(NonConvergence(report))
    }
}
