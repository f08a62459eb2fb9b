//! Interacting-particle simulation of McKean-Vlasov SDEs.
//!
//! A model supplies drift and diffusion coefficients that depend on the
//! current state and on the empirical law of the particle system. Three
//! time-stepping schemes are provided: standard Euler, tamed Euler and
//! drift-implicit Euler.

pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod grid;
pub mod harness;
pub mod measure;
pub mod model;
pub mod models;
pub mod rng;
pub mod schemes;

pub use config::{SchemeConfig, SchemeKind};
pub use engine::{simulate, simulate_coupled, simulate_pathwise_pair, SimulationResult, SimulationRun};
pub use error::{Error, Result};
pub use grid::TimeGrid;
pub use measure::MeasureView;
pub use model::{ClosureModel, Model, RegularityConstants};
