use serde::{Deserialize, Serialize};

use super::quotients::second_diff_quotient;
use crate::error::{Error, Result};
use crate::fields::{Grid, SpaceTimeField, TimeGrid, TorusGrid};
use crate::function::SpaceTimeFunction;
use crate::linalg::{SpdMatrix, SymMat};

/// Sampling resolution for the periodic remainder of a fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Nodes per spatial period.
    pub nodes: usize,
    /// Time steps per temporal period.
    pub time_steps: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { nodes: 32, time_steps: 32 }
    }
}

/// Sup-norm diagnostics of a fitted decomposition.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FitResiduals {
    /// `max_i sup |v(x + a_i e_i, t) - v(x, t)|`.
    pub spatial_periodicity: f64,
    /// `sup |v(x, t - a0) - v(x, t)|`.
    pub temporal_periodicity: f64,
    /// Discrete `sup |-u_t det D^2 u - f|` at the sample nodes; needs `f`.
    pub pde: Option<f64>,
    /// `|tau det A - mean f|`; needs `f`.
    pub mean_identity: Option<f64>,
}

/// `u = gamma - tau t + x'Ax / 2 + b.x + v` with `v` sampled over one cell
/// and one period.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecompositionFit {
    pub tau: f64,
    pub a: SpdMatrix,
    pub b: Vec<f64>,
    pub gamma: f64,
    pub periods: Vec<f64>,
    pub time_period: f64,
    pub v: SpaceTimeField,
    pub residuals: FitResiduals,
}

impl DecompositionFit {
    /// `gamma - tau t + x'Ax / 2 + b.x`.
    pub fn model(&self, x: &[f64], t: f64) -> f64 {
        let n = self.a.n();
        self.gamma - self.tau * t
            + 0.5 * self.a.quad_form(&x[..n])
            + self.b.iter().zip(x).map(|(b, x)| b * x).sum::<f64>()
    }

    /// `u - model` evaluated directly, anywhere.
    pub fn remainder(&self, u: &dyn SpaceTimeFunction, x: &[f64], t: f64) -> f64 {
        u.value(x, t) - self.model(x, t)
    }
}

fn axis(n: usize, i: usize, len: f64) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[i] = len;
    e
}

/// Recovers `(tau, A, b, gamma, v)` from exact quotients over whole periods.
pub fn fit_decomposition(
    u: &dyn SpaceTimeFunction,
    periods: &[f64],
    a0: f64,
    source: Option<&dyn SpaceTimeFunction>,
    opts: &FitOptions,
) -> Result<DecompositionFit> {
    let n = u.dim();
    if periods.len() != n {
        return Err(Error::InvalidArgument(format!("{} periods for dimension {n}", periods.len())));
    }
    if periods.iter().chain([&a0]).any(|p| !(*p > 0.0 && p.is_finite())) {
        return Err(Error::InvalidArgument("periods must be positive".into()));
    }
    if opts.time_steps == 0 {
        return Err(Error::InvalidArgument("time_steps must be positive".into()));
    }
    if let Some(f) = source {
        if f.dim() != n {
            return Err(Error::GridMismatch("source dimension differs from u".into()));
        }
    }
    let origin = vec![0.0; n];
    let tau = (u.value(&origin, -a0) - u.value(&origin, 0.0)) / a0;

    let mut a = SymMat::zeros(n);
    for i in 0..n {
        let e = axis(n, i, periods[i]);
        a.set(i, i, second_diff_quotient(u, &e, &origin, 0.0)?);
    }
    for i in 0..n {
        for j in i + 1..n {
            let mut e = axis(n, i, periods[i]);
            e[j] = periods[j];
            let e2 = periods[i].powi(2) + periods[j].powi(2);
            let q = second_diff_quotient(u, &e, &origin, 0.0)?;
            let off = (e2 * q - periods[i].powi(2) * a.get(i, i) - periods[j].powi(2) * a.get(j, j))
                / (2.0 * periods[i] * periods[j]);
            a.set(i, j, off);
        }
    }
    let a = SpdMatrix::new(a).map_err(|_| Error::FitFailure("fitted A is not positive definite".into()))?;

    let b: Vec<f64> = (0..n)
        .map(|i| {
            let e = axis(n, i, periods[i]);
            let m: Vec<f64> = e.iter().map(|v| -v).collect();
            (u.value(&e, 0.0) - u.value(&m, 0.0)) / (2.0 * periods[i])
        })
        .collect();
    let gamma = u.value(&origin, 0.0);

    let torus = TorusGrid::new(periods, &vec![opts.nodes; n])?;
    let time = TimeGrid::new(-a0, opts.time_steps, Some(a0))?;
    let mut fit = DecompositionFit {
        tau,
        a,
        b,
        gamma,
        periods: periods.to_vec(),
        time_period: a0,
        v: SpaceTimeField::zeros(torus.clone().into(), time.clone()),
        residuals: FitResiduals::default(),
    };
    let v = SpaceTimeField::sample(torus.clone().into(), time.clone(), |x, t| fit.remainder(u, x, t))?;
    fit.v = v;

    let mut spatial = 0.0f64;
    let mut temporal = 0.0f64;
    let mut shifted = vec![0.0; n];
    for step in 0..time.levels() {
        let t = time.time(step);
        for node in 0..torus.len() {
            let x = &torus.coord(node)[..n];
            let here = fit.v.value(node, step);
            for i in 0..n {
                shifted.copy_from_slice(x);
                shifted[i] += periods[i];
                spatial = spatial.max((fit.remainder(u, &shifted, t) - here).abs());
            }
            temporal = temporal.max((fit.remainder(u, x, t - a0) - here).abs());
        }
    }
    fit.residuals.spatial_periodicity = spatial;
    fit.residuals.temporal_periodicity = temporal;

    if let Some(f) = source {
        fit.residuals.pde = Some(discrete_pde_residual(u, f, &torus, &time));
        let mut sum = 0.0;
        let mut count = 0usize;
        for step in 0..time.steps() {
            let t = time.time(step);
            for node in 0..torus.len() {
                sum += f.value(&torus.coord(node)[..n], t);
                count += 1;
            }
        }
        fit.residuals.mean_identity = Some((fit.tau * fit.a.det() - sum / count as f64).abs());
    }
    Ok(fit)
}

/// Second-order differences of `u` with the torus spacing and the time step,
/// evaluated at the torus nodes and all but the first time level.
pub fn discrete_pde_residual(u: &dyn SpaceTimeFunction, f: &dyn SpaceTimeFunction, torus: &TorusGrid, time: &TimeGrid) -> f64 {
    let n = torus.dim();
    let dt = time.dt();
    let mut worst = 0.0f64;
    let mut p = vec![0.0; n];
    for step in 1..time.levels() {
        let t = time.time(step);
        for node in 0..torus.len() {
            let x = &torus.coord(node)[..n];
            let c = u.value(x, t);
            let mut h = SymMat::zeros(n);
            for i in 0..n {
                let hi = torus.spacing(i);
                p.copy_from_slice(x);
                p[i] += hi;
                let up = u.value(&p, t);
                p[i] -= 2.0 * hi;
                let um = u.value(&p, t);
                h.set(i, i, (up + um - 2.0 * c) / (hi * hi));
                for j in i + 1..n {
                    let hj = torus.spacing(j);
                    let mut corner = |si: f64, sj: f64| {
                        p.copy_from_slice(x);
                        p[i] += si * hi;
                        p[j] += sj * hj;
                        u.value(&p, t)
                    };
                    let v = corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0);
                    h.set(i, j, v / (4.0 * hi * hj));
                }
            }
            let ut = (c - u.value(x, t - dt)) / dt;
            worst = worst.max((-ut * h.det() - f.value(x, t)).abs());
        }
    }
    worst
}

/// Empirical constant of `|u - x'Ax/2 + tau t| <= C (|x|^2 - t)^{(4 - eps)/4}`
/// at each radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticReport {
    pub eps: f64,
    pub radii: Vec<f64>,
    pub ratios: Vec<f64>,
}

impl AsymptoticReport {
    pub fn max_ratio(&self) -> f64 {
        self.ratios.iter().cloned().fold(0.0, f64::max)
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.ratios.windows(2).all(|w| w[1] < w[0])
    }
}

/// Deterministic unit directions: `+-1` in 1D, equally spaced angles in 2D,
/// a Fibonacci lattice in 3D.
pub fn unit_directions(n: usize, count: usize) -> Vec<Vec<f64>> {
    match n {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
                vec![th.cos(), th.sin()]
            })
            .collect(),
        _ => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - (2.0 * k as f64 + 1.0) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let th = golden * k as f64;
                    vec![r * th.cos(), r * th.sin(), z]
                })
                .collect()
        }
    }
}

/// Samples `|x| = r` in 24 directions at `t in {0, -r^2/4, -r^2}` for every radius.
pub fn asymptotic_check(u: &dyn SpaceTimeFunction, fit: &DecompositionFit, radii: &[f64], eps: f64) -> Result<AsymptoticReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument("eps must lie in (0, 1)".into()));
    }
    if radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::InvalidArgument("radii must be positive".into()));
    }
    let n = u.dim();
    let dirs = unit_directions(n, 24);
    let exponent = (4.0 - eps) / 4.0;
    let ratios = radii
        .iter()
        .map(|&r| {
            let mut worst = 0.0f64;
            for d in &dirs {
                let x: Vec<f64> = d.iter().map(|v| v * r).collect();
                for t in [0.0, -0.25 * r * r, -r * r] {
                    let dev = u.value(&x, t) - 0.5 * fit.a.quad_form(&x) + fit.tau * t;
                    worst = worst.max(dev.abs() / (r * r - t).powf(exponent));
                }
            }
            worst
        })
        .collect();
    Ok(AsymptoticReport { eps, radii: radii.to_vec(), ratios })
}
