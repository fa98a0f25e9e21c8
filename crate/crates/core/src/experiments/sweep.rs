use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{integrate, steady_state, Generator, Representation, SteadyState};
use crate::error::{Error, Result};
use crate::master_equation::{assemble_with_rates, compute_rates, DipolarCoupling, PhysicalParams};
use crate::observables::build_block_system;

use super::config::{ScenarioConfig, SweepParam};
use super::scenario::{concurrence_peak, concurrence_series, decay_time};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellRecord {
    pub steady_state: SteadyState,
    pub max_concurrence: f64,
    pub time_of_max: f64,
    /// The maximum sits on the last sample, so the run may not have seen the peak.
    pub max_at_end: bool,
    pub decay_time_estimate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub ix: usize,
    pub iy: usize,
    pub x: f64,
    pub y: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record: Option<CellRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub name: String,
    pub x: Axis,
    pub y: Axis,
    pub couple_kappa2: bool,
    /// Row-major with `x` varying fastest.
    pub cells: Vec<Cell>,
    /// `(ix, iy)` of every failed cell.
    pub failed: Vec<(usize, usize)>,
}

impl SweepResult {
    pub fn cell(&self, ix: usize, iy: usize) -> &Cell {
        &self.cells[iy * self.x.values.len() + ix]
    }

    /// `max_concurrence` as `grid[iy][ix]`; failed cells are `None`.
    pub fn max_concurrence_grid(&self) -> Vec<Vec<Option<f64>>> {
        self.cells
            .chunks(self.x.values.len())
            .map(|row| row.iter().map(|c| c.record.as_ref().map(|r| r.max_concurrence)).collect())
            .collect()
    }
}

/// Parameters of one grid cell.
pub fn cell_params(cfg: &ScenarioConfig, x: f64, y: f64) -> Result<PhysicalParams> {
    let spec = cfg.sweep.as_ref().ok_or_else(|| Error::invalid("sweep", "config has no sweep section"))?;
    let mut p = cfg.params.clone();
    spec.x.param.apply(&mut p, x)?;
    spec.y.param.apply(&mut p, y)?;
    if spec.couple_kappa2 {
        let DipolarCoupling::Scaled(s) = &mut p.dipolar else {
            return Err(Error::invalid("sweep.couple_kappa2", "needs the scaled dipolar entry"));
        };
        s.kappa2 = s.kappa1;
    }
    Ok(p)
}

/// Run the configured protocol in one cell.
pub fn run_cell(cfg: &ScenarioConfig, p: &PhysicalParams) -> Result<CellRecord> {
    p.validate()?;
    let rates = compute_rates(p)?;
    let init = cfg.initial_state.expand(p.m0);
    let opts = cfg.integrate_options();
    let gen: Box<dyn Generator + Sync> = match cfg.representation {
        Representation::Blocks => Box::new(build_block_system(p, &rates)),
        Representation::Liouvillian => Box::new(assemble_with_rates(p, &rates)),
    };
    let traj = integrate(gen.as_ref(), init, &opts)?;
    let values: Vec<f64> = concurrence_series(&traj)?.iter().map(|c| c.value).collect();
    let peak = concurrence_peak(gen.as_ref(), &traj, &values, opts.time_unit)?;
    Ok(CellRecord {
        steady_state: steady_state(p, &rates, &init)?,
        max_concurrence: peak.value.clamp(0.0, 1.0),
        time_of_max: peak.time,
        max_at_end: peak.at_end,
        decay_time_estimate: decay_time(&traj.times, &values, &peak),
    })
}

/// Evaluate every grid cell in parallel; results come back in grid order and
/// do not depend on `workers`. Failing cells are recorded, not fatal.
pub fn run_sweep(cfg: &ScenarioConfig, workers: Option<usize>) -> Result<SweepResult> {
    cfg.validate()?;
    let spec = cfg.sweep.as_ref().ok_or_else(|| Error::invalid("sweep", "config has no sweep section"))?;
    let x = Axis { param: spec.x.param, values: spec.x.resolve("sweep.x")? };
    let y = Axis { param: spec.y.param, values: spec.y.resolve("sweep.y")? };
    let jobs: Vec<(usize, usize)> =
        (0..y.values.len()).flat_map(|iy| (0..x.values.len()).map(move |ix| (ix, iy))).collect();

    let eval = |&(ix, iy): &(usize, usize)| {
        let (xv, yv) = (x.values[ix], y.values[iy]);
        let outcome = cell_params(cfg, xv, yv).and_then(|p| run_cell(cfg, &p));
        if let Err(e) = &outcome {
            log::warn!("sweep cell ({ix}, {iy}) at x = {xv}, y = {yv} failed: {e}");
        }
        let (record, error) = match outcome {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e.to_string())),
        };
        Cell { ix, iy, x: xv, y: yv, record, error }
    };

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        if n == 0 {
            return Err(Error::invalid("workers", "must be at least 1"));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let cells: Vec<Cell> = pool.install(|| jobs.par_iter().map(eval).collect());

    let failed = cells.iter().filter(|c| c.error.is_some()).map(|c| (c.ix, c.iy)).collect();
    Ok(SweepResult { name: cfg.name.clone(), x, y, couple_kappa2: spec.couple_kappa2, cells, failed })
}
