//! Closed-form paraboloid barriers `w = K (-s + c (|y|^2 - r0^2)) + H`.
//!
//! Each barrier solves `-w_s det D_y^2 w = rate` exactly: `w_s = -K` and
//! `D^2 w = 2 K c I`, so the operator equals `2^n K^(n+1) c^n`, and `K` is
//! chosen to make that equal to the rate. On the lateral boundary of its
//! domain (`s = c (|y|^2 - r0^2)`) the barrier equals `H`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BarrierKind {
    /// Lower-rate barrier `w1` on `{c1 (|y|^2 - eps0^2 R^2) < s <= 0}` with
    /// `c1 = eps1 H / (eps0^2 R^2)`; it dominates solutions with `f >= lambda`.
    Lower { eps0: f64, eps1: f64 },
    /// Upper-rate barrier `w2` on `{c2 (|y|^2 - 2 R^2) < s <= 0}` with
    /// `c2 = eps2 H / R^2`; solutions with `f <= Lambda` dominate it.
    Upper { eps2: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierSpec {
    pub kind: BarrierKind,
    /// `lambda` for the lower barrier, `Lambda` for the upper one.
    pub rate: f64,
    pub h: f64,
    pub r: f64,
    pub n: usize,
}

impl BarrierSpec {
    pub fn lower(n: usize, lambda: f64, eps0: f64, eps1: f64, h: f64, r: f64) -> Result<Self> {
        Self { kind: BarrierKind::Lower { eps0, eps1 }, rate: lambda, h, r, n }.validated()
    }

    pub fn upper(n: usize, big_lambda: f64, eps2: f64, h: f64, r: f64) -> Result<Self> {
        Self { kind: BarrierKind::Upper { eps2 }, rate: big_lambda, h, r, n }.validated()
    }

    fn validated(self) -> Result<Self> {
        let eps_ok = match self.kind {
            BarrierKind::Lower { eps0, eps1 } => eps0 > 0.0 && eps1 > 0.0,
            BarrierKind::Upper { eps2 } => eps2 > 0.0,
        };
        let finite = [self.rate, self.h, self.r].iter().all(|v| v.is_finite());
        if !(eps_ok && finite && self.rate > 0.0 && self.h > 0.0 && self.r > 0.0) {
            return Err(Error::InvalidArgument("barrier parameters must be positive".into()));
        }
        if !(1..=3).contains(&self.n) {
            return Err(Error::InvalidArgument(format!("barrier dimension {} not in 1..=3", self.n)));
        }
        Ok(self)
    }

    /// Slope `c` of the paraboloid in `|y|^2`.
    pub fn slope(&self) -> f64 {
        match self.kind {
            BarrierKind::Lower { eps0, eps1 } => eps1 * self.h / (eps0 * eps0 * self.r * self.r),
            BarrierKind::Upper { eps2 } => eps2 * self.h / (self.r * self.r),
        }
    }

    /// `r0^2`, where the lateral boundary meets `s = 0`.
    pub fn radius_sq(&self) -> f64 {
        match self.kind {
            BarrierKind::Lower { eps0, .. } => eps0 * eps0 * self.r * self.r,
            BarrierKind::Upper { .. } => 2.0 * self.r * self.r,
        }
    }

    /// Time coefficient `K`.
    pub fn coefficient(&self) -> f64 {
        let n = self.n as f64;
        let p = 1.0 / (n + 1.0);
        self.rate.powf(p) / (2.0 * self.slope()).powf(n * p)
    }

    /// `s` on the lateral boundary through `y`.
    pub fn lateral(&self, y: &[f64]) -> f64 {
        self.slope() * (y[..self.n].iter().map(|v| v * v).sum::<f64>() - self.radius_sq())
    }

    /// Closed domain test; the lateral boundary is included so the boundary
    /// value `H` can be evaluated.
    pub fn contains(&self, y: &[f64], s: f64) -> bool {
        let lateral = self.lateral(y);
        s <= 0.0 && s >= lateral - 1e-12 * (1.0 + lateral.abs())
    }
}

pub fn barrier_eval(spec: &BarrierSpec, y: &[f64], s: f64) -> Result<f64> {
    if y.len() < spec.n || !spec.contains(y, s) {
        return Err(Error::OutsideDomain);
    }
    Ok(spec.coefficient() * (spec.lateral(y) - s) + spec.h)
}
