use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::fit::unit_directions;
use crate::error::{Error, Result};
use crate::fields::{BoxGrid, Grid};
use crate::function::SpaceTimeFunction;
use crate::linalg::{SpdMatrix, SymMat};

/// `{x : (x - c)' E (x - c) <= 1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ellipsoid {
    pub center: Vec<f64>,
    pub shape: SpdMatrix,
    pub iterations: usize,
}

impl Ellipsoid {
    pub fn gauge(&self, x: &[f64]) -> f64 {
        let d: Vec<f64> = x.iter().zip(&self.center).map(|(x, c)| x - c).collect();
        self.shape.quad_form(&d)
    }
}

pub const MVEE_TOL: f64 = 1e-6;
const MVEE_MAX_ITER: usize = 5_000_000;

/// Minimum-volume enclosing ellipsoid by Khachiyan's barycentric ascent with
/// away steps. Stops once every lifted point satisfies
/// `q' X^{-1} q <= (1 + tol)(d + 1)`; the result is then inflated so that
/// every input point lies inside.
pub fn mvee(points: &[Vec<f64>], tol: f64) -> Result<Ellipsoid> {
    let m = points.len();
    let d = points.first().map_or(0, |p| p.len());
    if d == 0 || m < d + 1 {
        return Err(Error::LevelSetTooSmall(m));
    }
    if points.iter().any(|p| p.len() != d) {
        return Err(Error::InvalidArgument("points have mixed dimensions".into()));
    }
    let lifted: Vec<DVector<f64>> =
        points.iter().map(|p| DVector::from_iterator(d + 1, p.iter().cloned().chain([1.0]))).collect();
    let dd = (d + 1) as f64;
    let mut w = vec![1.0 / m as f64; m];
    let mut gauges = vec![0.0; m];
    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    let mut xinv = DMatrix::<f64>::zeros(d + 1, d + 1);
    while iterations < MVEE_MAX_ITER {
        // Rank-one updates drift; rebuild the inverse now and then.
        if iterations % 500 == 0 {
            let mut x = DMatrix::<f64>::zeros(d + 1, d + 1);
            for (q, &wi) in lifted.iter().zip(&w) {
                if wi > 0.0 {
                    x.ger(wi, q, q, 1.0);
                }
            }
            xinv = x
                .try_inverse()
                .ok_or_else(|| Error::InvalidArgument("points are affinely degenerate".into()))?;
            for (g, q) in gauges.iter_mut().zip(&lifted) {
                *g = (&xinv * q).dot(q);
            }
        }
        let (j, &gmax) = gauges.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        let (k, &gmin) = gauges
            .iter()
            .enumerate()
            .filter(|(i, _)| w[*i] > 0.0)
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        gap = gmax / dd - 1.0;
        if gap <= tol {
            break;
        }
        iterations += 1;
        // X <- c (X + sigma q q')
        let (idx, c, sigma) = if gap >= 1.0 - gmin / dd {
            let s = (gmax - dd) / (dd * (gmax - 1.0));
            for wi in w.iter_mut() {
                *wi *= 1.0 - s;
            }
            w[j] += s;
            (j, 1.0 - s, s / (1.0 - s))
        } else {
            let cap = w[k] / (1.0 - w[k]);
            let beta = if gmin > 1.0 { ((dd - gmin) / (dd * (gmin - 1.0))).min(cap) } else { cap };
            for wi in w.iter_mut() {
                *wi *= 1.0 + beta;
            }
            w[k] -= beta;
            if w[k] < 1e-15 {
                w[k] = 0.0;
            }
            (k, 1.0 + beta, -beta / (1.0 + beta))
        };
        let v = &xinv * &lifted[idx];
        let denom = 1.0 + sigma * gauges[idx];
        for (g, q) in gauges.iter_mut().zip(&lifted) {
            let p = q.dot(&v);
            *g = (*g - sigma * p * p / denom) / c;
        }
        xinv.ger(-sigma / denom, &v, &v, 1.0);
        xinv /= c;
    }
    if gap > tol {
        return Err(Error::MveeNonConvergence { gap });
    }

    let mut center = vec![0.0; d];
    for (p, &wi) in points.iter().zip(&w) {
        for (c, v) in center.iter_mut().zip(p) {
            *c += wi * v;
        }
    }
    let mut cov = SymMat::zeros(d);
    for (p, &wi) in points.iter().zip(&w) {
        for r in 0..d {
            for c in r..d {
                cov.set(r, c, cov.get(r, c) + wi * (p[r] - center[r]) * (p[c] - center[c]));
            }
        }
    }
    let shape = cov
        .inverse()
        .ok_or_else(|| Error::InvalidArgument("points are affinely degenerate".into()))?
        .scaled(1.0 / d as f64);
    let mut ell = Ellipsoid { center, shape: SpdMatrix::new(shape)?, iterations };
    let worst = points.iter().map(|p| ell.gauge(p)).fold(0.0, f64::max);
    if worst > 1.0 {
        ell.shape = SpdMatrix::new(ell.shape.scaled(1.0 / worst))?;
    }
    Ok(ell)
}

/// John factor `n^{-3/2}`.
pub fn alpha(n: usize) -> f64 {
    (n as f64).powf(-1.5)
}

/// Sublevel set `{x : u(x, 0) < H}` sampled on a window, with its MVEE and
/// the volume-preserving normalizer `x -> a_H (x - center)` onto `B_R`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LevelSetReport {
    pub h: f64,
    pub inliers: Vec<Vec<f64>>,
    pub boundary_inliers: usize,
    pub ellipsoid: Ellipsoid,
    pub r: f64,
    pub ratio: f64,
    /// `a_H = R E^{1/2}`, `det a_H = 1`.
    pub normalizer: SymMat,
    pub alpha: f64,
    /// One grid cell (its diagonal) in physical units.
    pub slack: f64,
    pub contains_inliers: bool,
    pub john_inner: bool,
}

impl LevelSetReport {
    pub fn dim(&self) -> usize {
        self.normalizer.n()
    }

    /// `a_H (x - center)`.
    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        let d: Vec<f64> = x.iter().zip(&self.ellipsoid.center).map(|(x, c)| x - c).collect();
        self.normalizer.mul_vec(&d)[..self.dim()].to_vec()
    }

    /// Inverse of [`Self::normalize`].
    pub fn denormalize(&self, y: &[f64]) -> Vec<f64> {
        let inv = self.normalizer.inverse().expect("normalizer is SPD");
        let x = inv.mul_vec(y);
        (0..self.dim()).map(|i| x[i] + self.ellipsoid.center[i]).collect()
    }

    /// Spectral norm of `a_H`: one physical grid cell becomes `slack * norm`.
    pub fn normalizer_norm(&self) -> f64 {
        self.normalizer.max_eigenvalue()
    }
}

pub fn level_set_report(u: &dyn SpaceTimeFunction, h: f64, window: &BoxGrid) -> Result<LevelSetReport> {
    let n = window.dim();
    if u.dim() != n {
        return Err(Error::GridMismatch("window dimension differs from u".into()));
    }
    let inside: Vec<bool> = (0..window.len()).map(|node| u.value(&window.coord(node)[..n], 0.0) < h).collect();
    let mut inliers = Vec::new();
    let mut boundary = Vec::new();
    for node in 0..window.len() {
        if !inside[node] {
            continue;
        }
        if window.is_boundary(node) {
            return Err(Error::LevelSetClipped);
        }
        let x = window.coord(node)[..n].to_vec();
        let edge = (0..n).any(|axis| {
            [-1, 1].iter().any(|&s| window.neighbor(node, axis, s).is_some_and(|m| !inside[m]))
        });
        if edge {
            boundary.push(x.clone());
        }
        inliers.push(x);
    }
    if inliers.len() < n + 2 {
        return Err(Error::LevelSetTooSmall(inliers.len()));
    }
    let hull = if boundary.len() > n { &boundary } else { &inliers };
    let mut ellipsoid = mvee(hull, MVEE_TOL)?;
    let worst = inliers.iter().map(|p| ellipsoid.gauge(p)).fold(0.0, f64::max);
    if worst > 1.0 {
        ellipsoid.shape = SpdMatrix::new(ellipsoid.shape.scaled(1.0 / worst))?;
    }

    let r = ellipsoid.shape.det().powf(-1.0 / (2.0 * n as f64));
    let normalizer = ellipsoid.shape.sqrt().scaled(r);
    let slack = (0..n).map(|a| window.spacing(a).powi(2)).sum::<f64>().sqrt();
    let contains_inliers = inliers.iter().all(|p| ellipsoid.gauge(p) <= 1.0 + 1e-9);

    // Shrunken boundary must lie in the hull of the inliers; hull membership
    // is tested through support functions in many directions.
    let al = alpha(n);
    let dirs = unit_directions(n, if n == 3 { 400 } else { 360 });
    let support: Vec<f64> = dirs
        .iter()
        .map(|d| hull.iter().map(|p| p.iter().zip(d).map(|(a, b)| a * b).sum::<f64>()).fold(f64::MIN, f64::max))
        .collect();
    let inv_sqrt = ellipsoid.shape.inv_sqrt();
    let john_inner = dirs.iter().all(|w| {
        let y = inv_sqrt.mul_vec(w);
        let p: Vec<f64> = (0..n).map(|i| ellipsoid.center[i] + al * y[i]).collect();
        dirs.iter().zip(&support).all(|(d, s)| p.iter().zip(d).map(|(a, b)| a * b).sum::<f64>() <= s + slack)
    });

    Ok(LevelSetReport {
        h,
        boundary_inliers: boundary.len(),
        inliers,
        ellipsoid,
        r,
        ratio: h / (r * r),
        normalizer,
        alpha: al,
        slack,
        contains_inliers,
        john_inner,
    })
}

/// Outcome of sampling `B_{e0 R} x (-e1 H, 0] ⊂ normalized Q_H ⊂ B_R x (-e2 H, 0]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JohnNormalization {
    pub eps0: f64,
    pub eps1: f64,
    pub eps2: f64,
    /// `max u / H` over the inner cylinder samples; the inner inclusion needs `< 1`.
    pub inner_max: f64,
    pub inner_holds: bool,
    /// Sampled points of `Q_H` leaving `B_R` (with one cell of slack).
    pub outer_space_violations: usize,
    /// Window nodes with `u(x, -e2 H) < H`.
    pub outer_time_violations: usize,
}

impl JohnNormalization {
    pub fn outer_holds(&self) -> bool {
        self.outer_space_violations == 0 && self.outer_time_violations == 0
    }

    pub fn holds(&self) -> bool {
        self.inner_holds && self.outer_holds()
    }
}

/// `eps0 = alpha / 2`, `eps1 = alpha / (4 m2)`, `eps2 = 1 / m1`. `u` must be
/// normalized so that `u(., 0) >= 0` with minimum at the origin (see
/// [`Recentered`]).
pub fn john_normalization_check(
    u: &dyn SpaceTimeFunction,
    report: &LevelSetReport,
    window: &BoxGrid,
    m1: f64,
    m2: f64,
) -> Result<JohnNormalization> {
    // m2 < m1 is allowed: deliberately wrong bounds are a useful control.
    if !(m1 > 0.0 && m2 > 0.0 && m1.is_finite() && m2.is_finite()) {
        return Err(Error::InvalidArgument("m1 and m2 must be positive".into()));
    }
    let n = report.dim();
    let h = report.h;
    let al = report.alpha;
    let (eps0, eps1, eps2) = (al / 2.0, al / (4.0 * m2), 1.0 / m1);
    let slack_y = report.slack * report.normalizer_norm();

    let radius = (eps0 * report.r - slack_y).max(0.0);
    let dirs = unit_directions(n, if n == 3 { 100 } else { 48 });
    let mut inner_max = u.value(&report.denormalize(&vec![0.0; n]), 0.0) / h;
    const LEVELS: usize = 16;
    for k in 0..=LEVELS {
        let s = -eps1 * h * (k as f64 / LEVELS as f64).min(1.0 - 1e-12);
        for frac in [0.25, 0.5, 0.75, 1.0] {
            for d in &dirs {
                let y: Vec<f64> = d.iter().map(|v| v * radius * frac).collect();
                inner_max = inner_max.max(u.value(&report.denormalize(&y), s) / h);
            }
        }
    }

    let mut outer_space = 0;
    for k in 0..=LEVELS {
        let t = -eps2 * h * (k as f64 / LEVELS as f64).min(1.0 - 1e-12);
        for node in 0..window.len() {
            let x = &window.coord(node)[..n];
            if u.value(x, t) < h {
                let y = report.normalize(x);
                if y.iter().map(|v| v * v).sum::<f64>().sqrt() > report.r + slack_y {
                    outer_space += 1;
                }
            }
        }
    }
    let t_edge = -eps2 * h;
    let outer_time = (0..window.len())
        .filter(|&node| u.value(&window.coord(node)[..n], t_edge) < h * (1.0 - 1e-12))
        .count();

    Ok(JohnNormalization {
        eps0,
        eps1,
        eps2,
        inner_max,
        inner_holds: inner_max < 1.0,
        outer_space_violations: outer_space,
        outer_time_violations: outer_time,
    })
}

/// `u(x + x*, t) - u(x*, 0)` with `x*` the minimizer of `u(., 0)`, so the
/// shifted solution vanishes and is minimal at the origin at `t = 0`.
pub struct Recentered<'a> {
    inner: &'a dyn SpaceTimeFunction,
    pub shift: Vec<f64>,
    pub offset: f64,
}

impl<'a> Recentered<'a> {
    /// Grid argmin over `window`, refined by a compass search down to `1e-10`.
    pub fn new(u: &'a dyn SpaceTimeFunction, window: &BoxGrid) -> Result<Self> {
        let n = u.dim();
        if window.dim() != n {
            return Err(Error::GridMismatch("window dimension differs from u".into()));
        }
        let mut best = window.coord(0)[..n].to_vec();
        let mut val = u.value(&best, 0.0);
        for node in 1..window.len() {
            let x = &window.coord(node)[..n];
            let v = u.value(x, 0.0);
            if v < val {
                val = v;
                best = x.to_vec();
            }
        }
        let mut step = (0..n).map(|a| window.spacing(a)).fold(0.0, f64::max);
        while step > 1e-10 {
            let mut moved = false;
            for axis in 0..n {
                for s in [-1.0, 1.0] {
                    let mut trial = best.clone();
                    trial[axis] += s * step;
                    let v = u.value(&trial, 0.0);
                    if v < val {
                        val = v;
                        best = trial;
                        moved = true;
                    }
                }
            }
            if !moved {
                step *= 0.5;
            }
        }
        Ok(Self { inner: u, shift: best, offset: val })
    }
}

impl SpaceTimeFunction for Recentered<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[f64], t: f64) -> f64 {
        let n = self.dim();
        let mut p = [0.0; 3];
        for i in 0..n {
            p[i] = x[i] + self.shift[i];
        }
        self.inner.value(&p[..n], t) - self.offset
    }
}
