//! Implicit time stepping for the first initial-boundary-value problem on
//! box cylinders, and the homogenization-gap experiment.

mod homogenize;
mod step;

pub use homogenize::{fit_rate, homogenization_gap, sweep, HomogenizationBase, HomogenizationRun, SweepRow};
pub use step::{implicit_step, StepOptions, StepReport};

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{BoxGrid, Grid, SpaceTimeField, SpatialGrid, TimeGrid};
use crate::function::SpaceTimeFunction;
use crate::mongeampere::{check_parabolic_convexity, pma_residual, ConvexityReport};

pub type SharedFunction = Arc<dyn SpaceTimeFunction + Send + Sync>;

/// `-u_t det D^2 u = f` in the cylinder, `u = g` on its parabolic boundary.
#[derive(Clone)]
pub struct IbvpProblem {
    pub grid: BoxGrid,
    pub time: TimeGrid,
    pub f: SharedFunction,
    /// Boundary data; read on lateral nodes at every level and on the whole
    /// bottom slice `t = t0`.
    pub g: SharedFunction,
    pub step: StepOptions,
}

impl IbvpProblem {
    pub fn new(grid: BoxGrid, time: TimeGrid, f: SharedFunction, g: SharedFunction) -> Self {
        Self { grid, time, f, g, step: StepOptions::default() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IbvpSolution {
    pub u: SpaceTimeField,
    pub convexity: ConvexityReport,
    /// Sup of the discrete operator residual over the trajectory.
    pub residual: f64,
    pub newton_iterations: usize,
}

/// Tolerance of the nodewise monotonicity gate `u(t_k) <= u(t_{k-1}) + tol`.
pub const MONOTONICITY_TOL: f64 = 1e-10;

pub fn solve_ibvp(problem: &IbvpProblem) -> Result<IbvpSolution> {
    let grid = &problem.grid;
    let n = grid.dim();
    if problem.f.dim() != n || problem.g.dim() != n {
        return Err(Error::GridMismatch("data dimension differs from the grid".into()));
    }
    let spatial: SpatialGrid = grid.clone().into();
    let f = SpaceTimeField::sample(spatial.clone(), problem.time.clone(), |x, t| problem.f.value(x, t))?;
    if let Some(index) = f.values().iter().position(|&v| !(v > 0.0)) {
        return Err(Error::Positivity { index, value: f.values()[index] });
    }
    let mut u = SpaceTimeField::zeros(spatial, problem.time.clone());
    let bottom: Vec<f64> = (0..grid.len()).map(|node| problem.g.value(&grid.coord(node)[..n], problem.time.t0())).collect();
    u.slice_mut(0).copy_from_slice(&bottom);

    let dt = problem.time.dt();
    let mut newton_iterations = 0;
    for step in 1..problem.time.levels() {
        let t = problem.time.time(step);
        let boundary: Vec<f64> = (0..grid.len())
            .map(|node| if grid.is_boundary(node) { problem.g.value(&grid.coord(node)[..n], t) } else { 0.0 })
            .collect();
        let wrap = |e: Error| Error::Step { step, source: Box::new(e) };
        let report = implicit_step(grid, u.slice(step - 1), f.slice(step), &boundary, dt, &problem.step).map_err(wrap)?;
        let prev = u.slice(step - 1);
        for (node, (now, before)) in report.u.iter().zip(prev).enumerate() {
            if now - before > MONOTONICITY_TOL {
                return Err(wrap(Error::MonotonicityGate { node, excess: now - before }));
            }
        }
        newton_iterations += report.newton_iterations;
        u.slice_mut(step).copy_from_slice(&report.u);
    }

    let residual = pma_residual(&u, &f)?.sup;
    let convexity = check_parabolic_convexity(&u);
    Ok(IbvpSolution { u, convexity, residual, newton_iterations })
}
