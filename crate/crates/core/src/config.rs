use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::model::RegularityConstants;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    StandardEuler,
    TamedEuler,
    ImplicitEuler,
}

impl SchemeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SchemeKind::StandardEuler => "standard_euler",
            SchemeKind::TamedEuler => "tamed_euler",
            SchemeKind::ImplicitEuler => "implicit_euler",
        }
    }
}

impl std::fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    /// Number of steps `M`.
    pub n_steps: usize,
    /// Horizon `T`.
    pub horizon: f64,
    /// Taming exponent in `(0, 1/2]`.
    pub taming_alpha: f64,
    pub solver_tol: f64,
    pub solver_max_iter: usize,
    /// Reject implicit runs with `h >= 1 / max(L_b, 2 beta)`.
    pub stepsize_guard: bool,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            kind: SchemeKind::TamedEuler,
            n_steps: 40,
            horizon: 2.0,
            taming_alpha: 0.5,
            solver_tol: 1e-10,
            solver_max_iter: 50,
            stepsize_guard: true,
        }
    }
}

impl SchemeConfig {
    pub fn new(kind: SchemeKind, n_steps: usize, horizon: f64) -> Self {
        Self {
            kind,
            n_steps,
            horizon,
            ..Self::default()
        }
    }

    pub fn with_kind(&self, kind: SchemeKind) -> Self {
        Self {
            kind,
            ..self.clone()
        }
    }

    pub fn with_steps(&self, n_steps: usize) -> Self {
        Self {
            n_steps,
            ..self.clone()
        }
    }

    pub fn step_size(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.horizon, self.n_steps)
    }

    /// Checks the configuration against the model's declared constants.
    pub fn validate(&self, constants: &RegularityConstants) -> Result<()> {
        self.grid()?;
        if !(self.taming_alpha > 0.0 && self.taming_alpha <= 0.5) {
            return Err(Error::config(format!(
                "taming_alpha must lie in (0, 1/2], got {}",
                self.taming_alpha
            )));
        }
        if !(self.solver_tol > 0.0) {
            return Err(Error::config("solver_tol must be positive"));
        }
        if self.solver_max_iter == 0 {
            return Err(Error::config("solver_max_iter must be at least 1"));
        }
        if self.kind == SchemeKind::ImplicitEuler && self.stepsize_guard {
            let bound = constants.implicit_step_bound();
            let h = self.step_size();
            if h >= bound {
                return Err(Error::config(format!(
                    "implicit step h = {h} violates h < 1/max(L_b, 2 beta) = {bound}"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constants(l_b: f64, beta: f64) -> RegularityConstants {
        RegularityConstants {
            lipschitz_onesided: l_b,
            lipschitz_diffusion: 1.0,
            poly_growth_q: 2.0,
            monotone_alpha: 1.0,
            monotone_beta: beta,
        }
    }

    #[test]
    fn default_is_valid() {
        SchemeConfig::default().validate(&constants(1.625, 0.25)).unwrap();
    }

    #[test]
    fn alpha_range() {
        let c = constants(1.0, 0.0);
        for alpha in [0.0, -0.1, 0.51] {
            let cfg = SchemeConfig {
                taming_alpha: alpha,
                ..SchemeConfig::default()
            };
            assert!(cfg.validate(&c).is_err(), "alpha {alpha}");
        }
        let cfg = SchemeConfig {
            taming_alpha: 0.25,
            ..SchemeConfig::default()
        };
        cfg.validate(&c).unwrap();
    }

    #[test]
    fn implicit_guard() {
        let c = constants(1.625, 0.25);
        // h = 2 / 3 > 1 / 1.625
        let cfg = SchemeConfig::new(SchemeKind::ImplicitEuler, 3, 2.0);
        assert!(cfg.validate(&c).is_err());
        // h = 0.5 < 0.615.
        SchemeConfig::new(SchemeKind::ImplicitEuler, 4, 2.0)
            .validate(&c)
            .unwrap();
        // Guard off accepts anything.
        let cfg = SchemeConfig {
            stepsize_guard: false,
            ..SchemeConfig::new(SchemeKind::ImplicitEuler, 1, 2.0)
        };
        cfg.validate(&c).unwrap();
        // Guard does not apply to explicit schemes.
        SchemeConfig::new(SchemeKind::TamedEuler, 1, 2.0)
            .validate(&c)
            .unwrap();
    }

    #[test]
    fn degenerate_grid() {
        let c = constants(1.0, 0.0);
        assert!(SchemeConfig::new(SchemeKind::TamedEuler, 0, 1.0).validate(&c).is_err());
        assert!(SchemeConfig::new(SchemeKind::TamedEuler, 4, 0.0).validate(&c).is_err());
    }
}
