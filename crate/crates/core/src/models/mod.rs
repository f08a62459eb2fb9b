//! Ready-made models.

mod bistable;
mod ginzburg_landau;
mod linear;
mod neuron;

pub use bistable::{bistable, Bistable, BistablePotentialParams};
pub use ginzburg_landau::{
    ginzburg_landau, ginzburg_landau_nd, GinzburgLandau, GinzburgLandauParams,
};
pub use linear::{linear, Linear, LinearParams};
pub use neuron::{neuron_network, NeuronNetwork, NeuronNetworkParams};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Model;

/// Serializable selection of a bundled model and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BundledModel {
    GinzburgLandau(GinzburgLandauParams),
    /// Coordinatewise Ginzburg-Landau in `dim` dimensions.
    GinzburgLandauNd {
        #[serde(default = "default_dim")]
        dim: usize,
        #[serde(default)]
        params: GinzburgLandauParams,
    },
    NeuronNetwork(NeuronNetworkParams),
    Bistable(BistablePotentialParams),
    Linear(LinearParams),
}

fn default_dim() -> usize {
    1
}

impl Default for BundledModel {
    fn default() -> Self {
        BundledModel::GinzburgLandau(GinzburgLandauParams::default())
    }
}

impl BundledModel {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::config(msg.to_string()));
        match self {
            BundledModel::GinzburgLandau(p) if p.sigma < 0.0 => bad("sigma must be >= 0"),
            BundledModel::GinzburgLandauNd { dim: 0, .. } => bad("dim must be >= 1"),
            BundledModel::GinzburgLandauNd { params, .. } if params.sigma < 0.0 => {
                bad("sigma must be >= 0")
            }
            BundledModel::NeuronNetwork(p)
                if !(p.a_r > 0.0 && p.a_d > 0.0 && p.t_max > 0.0) =>
            {
                bad("a_r, a_d and t_max must be positive")
            }
            BundledModel::Bistable(p) if p.theta < 0.0 => bad("theta must be >= 0"),
            _ => Ok(()),
        }
    }

    pub fn build(&self) -> Result<Box<dyn Model>> {
        self.validate()?;
        Ok(match *self {
            BundledModel::GinzburgLandau(p) => Box::new(ginzburg_landau(p)),
            BundledModel::GinzburgLandauNd { dim, params } => {
                Box::new(ginzburg_landau_nd(params, dim))
            }
            BundledModel::NeuronNetwork(p) => Box::new(neuron_network(p)),
            BundledModel::Bistable(p) => Box::new(bistable(p)),
            BundledModel::Linear(p) => Box::new(linear(p)),
        })
    }

    /// The same family re-instantiated in dimension `dim`, for
    /// dimension-scaling studies. Only the Ginzburg-Landau family scales.
    pub fn with_dim(&self, dim: usize) -> Result<BundledModel> {
        match *self {
            BundledModel::GinzburgLandau(params) | BundledModel::GinzburgLandauNd { params, .. } => {
                Ok(BundledModel::GinzburgLandauNd { dim, params })
            }
            _ => Err(Error::config(
                "dimension scans need a ginzburg_landau or ginzburg_landau_nd model",
            )),
        }
    }
}
