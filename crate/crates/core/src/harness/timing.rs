use serde::{Deserialize, Serialize};

use crate::config::{SchemeConfig, SchemeKind};
use crate::engine::{simulate, SimulationRun};
use crate::error::{Error, Result};
use crate::model::Model;

use super::{loglog_fit, median};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimingSpec {
    pub dims: Vec<usize>,
    pub particle_counts: Vec<usize>,
    pub explicit: SchemeKind,
    pub implicit: SchemeKind,
    pub step_size: f64,
    pub horizon: f64,
    pub repeats: usize,
    pub seed: u64,
}

impl Default for TimingSpec {
    fn default() -> Self {
        Self {
            dims: vec![1, 10, 50],
            particle_counts: vec![100, 1000],
            explicit: SchemeKind::TamedEuler,
            implicit: SchemeKind::ImplicitEuler,
            step_size: 0.05,
            horizon: 1.0,
            repeats: 3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingCell {
    pub dim: usize,
    pub n_particles: usize,
    /// Median stepping time over the repeats, in seconds.
    pub explicit_secs: f64,
    pub implicit_secs: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingTable {
    pub explicit: SchemeKind,
    pub implicit: SchemeKind,
    pub cells: Vec<TimingCell>,
    /// Fitted exponent of time against `d`, one entry per particle count.
    pub explicit_dim_exponent: Vec<Option<f64>>,
    pub implicit_dim_exponent: Vec<Option<f64>>,
    /// Fitted exponent of time against `N`, one entry per dimension.
    pub explicit_particle_exponent: Vec<Option<f64>>,
    pub implicit_particle_exponent: Vec<Option<f64>>,
}

impl TimingTable {
    pub fn cell(&self, dim: usize, n: usize) -> Option<&TimingCell> {
        self.cells.iter().find(|c| c.dim == dim && c.n_particles == n)
    }
}

fn median_time<M: Model + ?Sized>(model: &M, run: &SimulationRun, repeats: usize) -> Result<f64> {
    let mut times = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        times.push(simulate(model, run)?.elapsed.as_secs_f64());
    }
    Ok(median(&mut times))
}

/// Wall-clock comparison of two schemes over a grid of dimensions and
/// particle counts. `build` instantiates the model family in dimension `d`.
pub fn timing_scan<F>(build: F, spec: &TimingSpec) -> Result<TimingTable>
where
    F: Fn(usize) -> Result<Box<dyn Model>>,
{
    if spec.dims.is_empty() || spec.particle_counts.is_empty() || spec.repeats == 0 {
        return Err(Error::config("dims, particle_counts and repeats must be non-empty"));
    }
    let grid = crate::grid::TimeGrid::from_step(spec.step_size, spec.horizon)?;
    let mut cells = Vec::new();
    for &dim in &spec.dims {
        let model = build(dim)?;
        for &n in &spec.particle_counts {
            let run = |kind| SimulationRun {
                scheme: SchemeConfig::new(kind, grid.n_steps(), spec.horizon),
                n_particles: n,
                master_seed: spec.seed,
                ..SimulationRun::default()
            };
            // One untimed pass warms caches and the thread pool.
            simulate(model.as_ref(), &run(spec.explicit))?;
            let explicit_secs = median_time(model.as_ref(), &run(spec.explicit), spec.repeats)?;
            let implicit_secs = median_time(model.as_ref(), &run(spec.implicit), spec.repeats)?;
            cells.push(TimingCell {
                dim,
                n_particles: n,
                explicit_secs,
                implicit_secs,
                ratio: implicit_secs / explicit_secs,
            });
        }
    }

    let exponent = |select: &dyn Fn(&TimingCell) -> bool,
                    x: &dyn Fn(&TimingCell) -> f64,
                    y: &dyn Fn(&TimingCell) -> f64| {
        let (xs, ys): (Vec<f64>, Vec<f64>) =
            cells.iter().filter(|c| select(c)).map(|c| (x(c), y(c))).unzip();
        loglog_fit(&xs, &ys).map(|f| f.slope)
    };
    let per_n = |y: &dyn Fn(&TimingCell) -> f64| -> Vec<Option<f64>> {
        spec.particle_counts
            .iter()
            .map(|&n| exponent(&|c| c.n_particles == n, &|c| c.dim as f64, y))
            .collect()
    };
    let per_d = |y: &dyn Fn(&TimingCell) -> f64| -> Vec<Option<f64>> {
        spec.dims
            .iter()
            .map(|&d| exponent(&|c| c.dim == d, &|c| c.n_particles as f64, y))
            .collect()
    };

    Ok(TimingTable {
        explicit: spec.explicit,
        implicit: spec.implicit,
        explicit_dim_exponent: per_n(&|c| c.explicit_secs),
        implicit_dim_exponent: per_n(&|c| c.implicit_secs),
        explicit_particle_exponent: per_d(&|c| c.explicit_secs),
        implicit_particle_exponent: per_d(&|c| c.implicit_secs),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{BundledModel, GinzburgLandauParams};

    #[test]
    fn small_scan_has_all_cells() {
        let family = BundledModel::GinzburgLandau(GinzburgLandauParams::default());
        let spec = TimingSpec {
            dims: vec![1, 2],
            particle_counts: vec![16, 32],
            repeats: 1,
            ..TimingSpec::default()
        };
        let table = timing_scan(|d| family.with_dim(d)?.build(), &spec).unwrap();
        assert_eq!(table.cells.len(), 4);
        assert!(table.cell(2, 32).is_some());
        assert_eq!(table.explicit_dim_exponent.len(), 2);
        assert_eq!(table.explicit_particle_exponent.len(), 2);
        for c in &table.cells {
            assert!(c.explicit_secs > 0.0 && c.implicit_secs > 0.0);
        }
    }

    #[test]
    fn empty_scan_is_rejected() {
        let spec = TimingSpec {
            dims: vec![],
            ..TimingSpec::default()
        };
        let family = BundledModel::default();
        assert!(timing_scan(|d| family.with_dim(d)?.build(), &spec).is_err());
    }
}
