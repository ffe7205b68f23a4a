use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{BoxGrid, Grid, SpaceTimeField, SpatialGrid, TimeGrid};
use crate::function::SpaceTimeFunction;
use crate::mongeampere::linearize;

/// `(u(x + e, t) + u(x - e, t) - 2 u(x, t)) / |e|^2`.
pub fn second_diff_quotient(u: &dyn SpaceTimeFunction, e: &[f64], x: &[f64], t: f64) -> Result<f64> {
    let n = u.dim();
    if e.len() < n || x.len() < n {
        return Err(Error::InvalidArgument("direction or point has too few components".into()));
    }
    let e2: f64 = e[..n].iter().map(|v| v * v).sum();
    if !(e2 > 0.0) {
        return Err(Error::InvalidArgument("direction must be nonzero".into()));
    }
    let mut xp = [0.0; 3];
    let mut xm = [0.0; 3];
    for i in 0..n {
        xp[i] = x[i] + e[i];
        xm[i] = x[i] - e[i];
    }
    Ok((u.value(&xp[..n], t) + u.value(&xm[..n], t) - 2.0 * u.value(&x[..n], t)) / e2)
}

/// `(u(x, t) - u(x, t - k)) / k` for `k > 0`, `t <= 0`.
pub fn time_diff_quotient(u: &dyn SpaceTimeFunction, k: f64, x: &[f64], t: f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::InvalidArgument("time offset must be positive".into()));
    }
    if t > 0.0 {
        return Err(Error::OutsideDomain);
    }
    let n = u.dim();
    Ok((u.value(&x[..n], t) - u.value(&x[..n], t - k)) / k)
}

/// Second difference quotient of a sampled field along `cells` grid steps
/// per axis; fails when `x +- e` leaves a bounded grid.
pub fn second_diff_quotient_field(u: &SpaceTimeField, cells: &[isize], node: usize, step: usize) -> Result<f64> {
    let g = u.grid();
    let n = g.dim();
    let shift = |mut node: usize, sign: isize| -> Result<usize> {
        for (axis, &c) in cells.iter().enumerate().take(n) {
            node = g.neighbor(node, axis, sign * c).ok_or(Error::OutsideDomain)?;
        }
        Ok(node)
    };
    let e2: f64 = (0..n).map(|a| (cells[a] as f64 * g.spacing(a)).powi(2)).sum();
    if !(e2 > 0.0) {
        return Err(Error::InvalidArgument("direction must be nonzero".into()));
    }
    let p = shift(node, 1)?;
    let m = shift(node, -1)?;
    Ok((u.value(p, step) + u.value(m, step) - 2.0 * u.value(node, step)) / e2)
}

/// Nonzero lattice vectors `k_1 a_1 e_1 + ... + k_n a_n e_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeDirectionSet {
    periods: Vec<f64>,
    coefficients: Vec<Vec<i64>>,
}

impl LatticeDirectionSet {
    pub fn new(periods: &[f64], coefficients: Vec<Vec<i64>>) -> Result<Self> {
        for k in &coefficients {
            if k.len() != periods.len() {
                return Err(Error::InvalidArgument("lattice coefficient vector has wrong length".into()));
            }
            if k.iter().all(|&v| v == 0) {
                return Err(Error::InvalidArgument("lattice directions must be nonzero".into()));
            }
        }
        Ok(Self { periods: periods.to_vec(), coefficients })
    }

    /// `a_i e_i` for every axis and `a_i e_i + a_j e_j` for every pair.
    pub fn standard(periods: &[f64]) -> Self {
        let n = periods.len();
        let mut coefficients = Vec::new();
        for i in 0..n {
            let mut k = vec![0; n];
            k[i] = 1;
            coefficients.push(k);
        }
        for i in 0..n {
            for j in i + 1..n {
                let mut k = vec![0; n];
                k[i] = 1;
                k[j] = 1;
                coefficients.push(k);
            }
        }
        Self { periods: periods.to_vec(), coefficients }
    }

    pub fn coefficients(&self) -> &[Vec<i64>] {
        &self.coefficients
    }

    pub fn vectors(&self) -> Vec<Vec<f64>> {
        self.coefficients
            .iter()
            .map(|k| k.iter().zip(&self.periods).map(|(&k, a)| k as f64 * a).collect())
            .collect()
    }
}

/// Minimum of `(1/u_t) D_t q + u^{ij} D_ij q` with `q = Delta_e^2 u`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsolutionReport {
    pub min: f64,
    pub node: usize,
    pub step: usize,
    pub samples: usize,
}

fn subsolution_min(u: &SpaceTimeField, q: &SpaceTimeField, nodes: &[usize]) -> Result<SubsolutionReport> {
    let mut report = SubsolutionReport { min: f64::INFINITY, node: 0, step: 0, samples: 0 };
    for step in 1..u.time().levels() {
        for &node in nodes {
            let lin = linearize(&u.hessian(node, step)?, u.backward_dt(node, step)?)
                .map_err(|e| match e {
                    Error::ConvexityLoss { .. } => Error::ConvexityLoss { node: Some(node) },
                    other => other,
                })?;
            let dq = q.hessian(node, step)?;
            let value = q.backward_dt(node, step)? / lin.ut + lin.adjugate.contract(&dq) / lin.det;
            report.samples += 1;
            if value < report.min {
                report.min = value;
                report.node = node;
                report.step = step;
            }
        }
    }
    Ok(report)
}

/// Samples `u` and `Delta_e^2 u` of a closed-form solution on `grid x time`
/// and evaluates the linearized operator on the quotient with the same
/// second-order stencils used for `u`.
pub fn check_quotient_subsolution(
    u: &dyn SpaceTimeFunction,
    e: &[f64],
    grid: &BoxGrid,
    time: &TimeGrid,
) -> Result<SubsolutionReport> {
    let n = u.dim();
    let origin = [0.0; 3];
    second_diff_quotient(u, e, &origin[..n], 0.0)?;
    let spatial: SpatialGrid = grid.clone().into();
    let us = SpaceTimeField::sample(spatial.clone(), time.clone(), |x, t| u.value(x, t))?;
    let q = SpaceTimeField::sample(spatial, time.clone(), |x, t| {
        second_diff_quotient(u, e, x, t).expect("direction validated above")
    })?;
    subsolution_min(&us, &q, &grid.interior_nodes())
}

/// Same check for a sampled trajectory, with `e` given in grid steps; only
/// nodes whose stencil and `x +- e` stay inside the box are used.
pub fn check_quotient_subsolution_field(u: &SpaceTimeField, cells: &[isize]) -> Result<SubsolutionReport> {
    let g = u.grid();
    let reach = cells.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0);
    let mut q = SpaceTimeField::zeros(g.clone(), u.time().clone());
    let usable: Vec<usize> = match g {
        SpatialGrid::Box(b) => b.inner_nodes(reach + 1),
        SpatialGrid::Torus(_) => (0..g.len()).collect(),
    };
    let valid: Vec<usize> = match g {
        SpatialGrid::Box(b) => b.inner_nodes(reach),
        SpatialGrid::Torus(_) => (0..g.len()).collect(),
    };
    for step in 0..u.time().levels() {
        for &node in &valid {
            let v = second_diff_quotient_field(u, cells, node, step)?;
            q.slice_mut(step)[node] = v;
        }
    }
    if usable.is_empty() {
        return Err(Error::OutsideDomain);
    }
    subsolution_min(u, &q, &usable)
}
