use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{solve_ibvp, IbvpProblem, IbvpSolution, SharedFunction, StepOptions};
use crate::error::{Error, Result};
use crate::fields::{BoxGrid, Grid, SpaceTimeField, TimeGrid, MIN_RESOLUTION};
use crate::function::FnFunction;

/// Shared setup of a homogenization experiment: the oscillatory source is
/// `f_eps(x, t) = osc(x / eps, t / eps)`, where `osc` has unit periods in
/// every variable and unit mean; the homogenized problem uses `f = 1`.
#[derive(Clone)]
pub struct HomogenizationBase {
    pub grid: BoxGrid,
    pub time: TimeGrid,
    pub oscillation: SharedFunction,
    pub g: SharedFunction,
    pub step: StepOptions,
}

impl HomogenizationBase {
    fn problem(&self, f: SharedFunction) -> IbvpProblem {
        IbvpProblem { grid: self.grid.clone(), time: self.time.clone(), f, g: self.g.clone(), step: self.step.clone() }
    }

    fn check_resolution(&self, eps: f64) -> Result<()> {
        if !(eps > 0.0) {
            return Err(Error::InvalidArgument("oscillation scale must be positive".into()));
        }
        let mut nodes_per_period = eps / self.time.dt();
        for axis in 0..self.grid.dim() {
            nodes_per_period = nodes_per_period.min(eps / self.grid.spacing(axis));
        }
        if nodes_per_period < MIN_RESOLUTION as f64 - 1e-9 {
            return Err(Error::Resolution { nodes_per_period });
        }
        Ok(())
    }

    fn scaled_source(&self, eps: f64) -> SharedFunction {
        let osc = self.oscillation.clone();
        let n = self.grid.dim();
        Arc::new(FnFunction::new(n, move |x: &[f64], t: f64| {
            let mut y = [0.0; 3];
            for (yi, xi) in y.iter_mut().zip(x) {
                *yi = xi / eps;
            }
            osc.value(&y[..n], t / eps)
        }))
    }

    pub fn solve_homogenized(&self) -> Result<IbvpSolution> {
        let n = self.grid.dim();
        solve_ibvp(&self.problem(Arc::new(FnFunction::new(n, |_: &[f64], _: f64| 1.0))))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HomogenizationRun {
    pub eps: f64,
    /// `sum_i eps_i^2 + eps_0 = n eps^2 + eps`.
    pub cell_measure: f64,
    /// `max |w - w_bar|` over all nodes and levels.
    pub gap: f64,
    pub newton_iterations: usize,
    pub wall_ms: f64,
    /// Empirical range of `-w_t` for the oscillatory solve.
    pub neg_ut_min: f64,
    pub neg_ut_max: f64,
    #[serde(skip)]
    pub w: Option<SpaceTimeField>,
    #[serde(skip)]
    pub w_bar: Option<SpaceTimeField>,
}

fn run_against(eps: f64, base: &HomogenizationBase, w_bar: &IbvpSolution) -> Result<HomogenizationRun> {
    base.check_resolution(eps)?;
    let start = Instant::now();
    let w = solve_ibvp(&base.problem(base.scaled_source(eps)))?;
    let gap = w.u.max_abs_diff(&w_bar.u)?;
    Ok(HomogenizationRun {
        eps,
        cell_measure: base.grid.dim() as f64 * eps * eps + eps,
        gap,
        newton_iterations: w.newton_iterations + w_bar.newton_iterations,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        neg_ut_min: w.convexity.min_neg_ut,
        neg_ut_max: w.convexity.max_neg_ut,
        w_bar: Some(w_bar.u.clone()),
        w: Some(w.u),
    })
}

pub fn homogenization_gap(eps: f64, base: &HomogenizationBase) -> Result<HomogenizationRun> {
    base.check_resolution(eps)?;
    let w_bar = base.solve_homogenized()?;
    run_against(eps, base, &w_bar)
}

/// One sweep row; failures are recorded per row.
#[derive(Debug)]
pub struct SweepRow {
    pub eps: f64,
    pub run: Result<HomogenizationRun>,
}

/// Runs every scale concurrently against a single homogenized solve; rows
/// come back in input order.
pub fn sweep(eps_list: &[f64], base: &HomogenizationBase) -> Result<Vec<SweepRow>> {
    if eps_list.is_empty() {
        return Ok(Vec::new());
    }
    let w_bar = base.solve_homogenized()?;
    let rows = std::thread::scope(|scope| {
        let handles: Vec<_> = eps_list
            .iter()
            .map(|&eps| {
                let w_bar = &w_bar;
                scope.spawn(move || SweepRow { eps, run: run_against(eps, base, w_bar) })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    });
    Ok(rows)
}

/// Least-squares slope of `ln gap` against `ln cell_measure`, over rows with
/// a positive gap. `None` with fewer than two such rows.
pub fn fit_rate(runs: &[&HomogenizationRun]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        runs.iter().filter(|r| r.gap > 0.0).map(|r| (r.cell_measure.ln(), r.gap.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(osc: SharedFunction) -> HomogenizationBase {
        HomogenizationBase {
            grid: BoxGrid::cube(2, 0.0, 1.0, 16).unwrap(),
            time: TimeGrid::new(-0.25, 16, None).unwrap(),
            oscillation: osc,
            g: Arc::new(FnFunction::new(2, |_: &[f64], _: f64| 0.0)),
            step: StepOptions::default(),
        }
    }

    #[test]
    fn no_oscillation_gives_zero_gap() {
        let b = base(Arc::new(FnFunction::new(2, |_: &[f64], _: f64| 1.0)));
        let run = homogenization_gap(0.5, &b).unwrap();
        assert!(run.gap <= 2.0 * b.step.tol);
    }

    #[test]
    fn under_resolved_scale_rejected() {
        let b = base(Arc::new(FnFunction::new(2, |_: &[f64], _: f64| 1.0)));
        assert!(matches!(homogenization_gap(0.25, &b), Err(Error::Resolution { .. })));
        let mut coarse_time = b.clone();
        coarse_time.grid = BoxGrid::cube(2, 0.0, 1.0, 64).unwrap();
        coarse_time.time = TimeGrid::new(-0.5, 8, None).unwrap();
        assert!(matches!(homogenization_gap(0.25, &coarse_time), Err(Error::Resolution { .. })));
    }

    #[test]
    fn sweep_composition() {
        let b = base(Arc::new(FnFunction::new(2, |y: &[f64], s: f64| {
            use std::f64::consts::PI;
            (1.0 + 0.3 * (2.0 * PI * y[0]).cos() * (2.0 * PI * y[1]).cos()) * (1.0 + 0.3 * (2.0 * PI * s).sin())
        })));
        assert!(sweep(&[], &b).unwrap().is_empty());
        let rows = sweep(&[0.5], &b).unwrap();
        let direct = homogenization_gap(0.5, &b).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].run.as_ref().unwrap().gap, direct.gap);
        let bad = sweep(&[0.5, 0.1], &b).unwrap();
        assert!(bad[0].run.is_ok() && bad[1].run.is_err());
    }

    #[test]
    fn rate_fit_recovers_power_law() {
        let mk = |m: f64| HomogenizationRun {
            eps: 0.0,
            cell_measure: m,
            gap: 3.0 * m.powf(0.4),
            newton_iterations: 0,
            wall_ms: 0.0,
            neg_ut_min: 0.0,
            neg_ut_max: 0.0,
            w: None,
            w_bar: None,
        };
        let runs = [mk(1.0), mk(0.3), mk(0.05)];
        let refs: Vec<&HomogenizationRun> = runs.iter().collect();
        assert!((fit_rate(&refs).unwrap() - 0.4).abs() < 1e-12);
        assert!(fit_rate(&refs[..1]).is_none());
    }
}
