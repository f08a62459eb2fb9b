use thiserror::Error;

use crate::schemes::ImplicitSolveReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("time {t} outside the grid domain [0, {horizon}]")]
    Domain { t: f64, horizon: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error(
        "implicit solve did not converge at step {step}, particle {particle} \
         (residual {:.3e} after {} iterations)",
        report.residual,
        report.iterations
    )]
    NonConvergence {
        step: usize,
        particle: usize,
        report: ImplicitSolveReport,
    },

    #[error("scheme diverged at step {step} (M = {n_steps}, seed = {seed})")]
    Diverged {
        n_steps: usize,
        seed: u64,
        step: usize,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
