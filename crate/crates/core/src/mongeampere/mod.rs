//! The operator `-u_t det D^2 u`, its linearization and convexity checks.

mod barrier;

pub use barrier::{barrier_eval, BarrierKind, BarrierSpec};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::SpaceTimeField;
use crate::linalg::SymMat;

/// Relative eigenvalue slack below which a Hessian still counts as convex.
pub const CONVEXITY_TOL: f64 = 1e-10;

/// Pointwise residual `-u_t det D^2 u - f` and its sup norm.
#[derive(Clone, Debug)]
pub struct Residual {
    /// Zero on boundary nodes and on the first time level.
    pub field: SpaceTimeField,
    pub sup: f64,
}

pub fn pma_residual(u: &SpaceTimeField, f: &SpaceTimeField) -> Result<Residual> {
    if !u.same_shape(f) {
        return Err(Error::GridMismatch("u and f are sampled on different grids".into()));
    }
    let mut field = SpaceTimeField::zeros(u.grid().clone(), u.time().clone());
    let nodes = u.grid().stencil_nodes();
    let mut sup = 0.0_f64;
    for step in 1..u.time().levels() {
        for &node in &nodes {
            let ut = u.backward_dt(node, step)?;
            let det = u.hessian(node, step)?.det();
            let r = -ut * det - f.value(node, step);
            sup = sup.max(r.abs());
            field.slice_mut(step)[node] = r;
        }
    }
    Ok(Residual { field, sup })
}

/// Coefficients of the linearized operator at one node.
///
/// The derivative of `-u_t det D^2 u` in the direction `(d_t, D^2 d)` is
/// `-d_t det + (-u_t) adj : D^2 d`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Linearization {
    pub adjugate: SymMat,
    pub det: f64,
    pub ut: f64,
}

pub fn linearize(hessian: &SymMat, ut: f64) -> Result<Linearization> {
    if !hessian.is_spd() {
        return Err(Error::ConvexityLoss { node: None });
    }
    if !(ut < 0.0) {
        return Err(Error::MonotonicityLoss { ut });
    }
    Ok(Linearization { adjugate: hessian.adjugate(), det: hessian.det(), ut })
}

pub fn is_convex(h: &SymMat) -> bool {
    h.min_eigenvalue() >= -CONVEXITY_TOL * (1.0 + h.max_abs())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    /// Spatial convexity of each time level.
    pub convex_per_step: Vec<bool>,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub max_ut: f64,
    /// Empirical `m1 = min(-u_t)`.
    pub min_neg_ut: f64,
    /// Empirical `m2 = max(-u_t)`.
    pub max_neg_ut: f64,
}

impl ConvexityReport {
    pub fn convex(&self) -> bool {
        self.convex_per_step.iter().all(|&c| c)
    }

    pub fn nonincreasing(&self) -> bool {
        self.max_ut <= CONVEXITY_TOL
    }

    pub fn passed(&self) -> bool {
        self.convex() && self.nonincreasing()
    }
}

/// Scans every interior node and time level of `u`.
pub fn check_parabolic_convexity(u: &SpaceTimeField) -> ConvexityReport {
    let nodes = u.grid().stencil_nodes();
    let mut report = ConvexityReport {
        convex_per_step: Vec::with_capacity(u.time().levels()),
        min_eigenvalue: f64::INFINITY,
        max_eigenvalue: f64::NEG_INFINITY,
        max_ut: f64::NEG_INFINITY,
        min_neg_ut: f64::INFINITY,
        max_neg_ut: f64::NEG_INFINITY,
    };
    for step in 0..u.time().levels() {
        let mut convex = true;
        for &node in &nodes {
            let h = u.hessian(node, step).expect("stencil nodes have full stencils");
            let eig = h.eigenvalues();
            report.min_eigenvalue = report.min_eigenvalue.min(eig[0]);
            report.max_eigenvalue = report.max_eigenvalue.max(eig[eig.len() - 1]);
            convex &= is_convex(&h);
            if step > 0 {
                let ut = u.backward_dt(node, step).expect("step > 0");
                report.max_ut = report.max_ut.max(ut);
                report.min_neg_ut = report.min_neg_ut.min(-ut);
                report.max_neg_ut = report.max_neg_ut.max(-ut);
            }
        }
        report.convex_per_step.push(convex);
    }
    report
}
