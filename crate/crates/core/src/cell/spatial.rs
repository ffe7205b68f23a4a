use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{periodic_hessian_field, Grid, PeriodicContraction, PeriodicField, StencilOrder};
use crate::linalg::{bicgstab, norm2, KrylovOptions, SpdMatrix, SymMat};

/// Periodic problem `det(B + D^2 xi) = det B * f1` for a mean-zero `xi`.
#[derive(Clone, Debug)]
pub struct CellProblem {
    pub b: SpdMatrix,
    pub f1: PeriodicField,
    /// Target for the sup norm of the discrete residual.
    pub tol: f64,
    /// Target for the sup norm of the residual net of the compatibility
    /// constant; tightening it pins `xi` down beyond `tol`.
    pub stationarity_tol: f64,
    pub max_newton: usize,
    /// Step halvings allowed per Newton iteration.
    pub max_backtracks: usize,
    /// Inner Krylov tolerance relative to the current nonlinear residual.
    pub linear_rtol: f64,
    pub order: StencilOrder,
}

impl CellProblem {
    pub fn new(b: SpdMatrix, f1: PeriodicField, tol: f64) -> Result<Self> {
        if b.n() != f1.grid().dim() {
            return Err(Error::InvalidArgument(format!(
                "matrix is {}x{} but f1 lives in dimension {}",
                b.n(),
                b.n(),
                f1.grid().dim()
            )));
        }
        f1.check_positive()?;
        let mean = f1.mean();
        if (mean - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("f1 has mean {mean}, expected 1")));
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        Ok(Self {
            b,
            f1,
            tol,
            stationarity_tol: tol,
            max_newton: 50,
            max_backtracks: 30,
            linear_rtol: 1e-2,
            order: StencilOrder::Sixth,
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CellSolution {
    /// Corrector normalized so that `xi(0) = 0`.
    pub xi: PeriodicField,
    pub newton_iterations: usize,
    pub linear_iterations: usize,
    /// Euclidean norm of `det(B + D^2 xi) - det B f1 - mu` after each
    /// accepted iterate, starting from `xi = 0`.
    pub history: Vec<f64>,
    /// Final compatibility constant `mu`.
    pub compatibility: f64,
    /// Final sup-norm residual.
    pub residual: f64,
}

/// `det(B + D^2 xi) - det B * f1` at every node, with the problem's stencil.
pub fn cell_residual(problem: &CellProblem, xi: &[f64]) -> Vec<f64> {
    assemble(problem, xi).residual
}

struct Assembly {
    hess: Vec<SymMat>,
    residual: Vec<f64>,
    spd: bool,
}

fn assemble(problem: &CellProblem, xi: &[f64]) -> Assembly {
    let target = problem.b.det();
    let mut spd = true;
    let mut hess = periodic_hessian_field(problem.f1.grid(), xi, problem.order);
    let mut residual = Vec::with_capacity(hess.len());
    for (h, f) in hess.iter_mut().zip(problem.f1.values()) {
        *h = h.add(problem.b.matrix());
        spd &= h.is_spd();
        residual.push(h.det() - target * f);
    }
    Assembly { hess, residual, spd }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Damped inexact Newton on `det(B + D^2 xi) - det B f1 - mu = 0`.
///
/// The scalar `mu` absorbs the discrete compatibility defect (the mean of the
/// residual cannot vanish exactly once `D^2` is discretized), which keeps
/// every linear system consistent. The constant mode of the Krylov unknown
/// carries `mu`; the rest is the mean-zero update of `xi`. Convergence is
/// judged on the residual without `mu`.
pub fn solve_spatial_corrector(problem: &CellProblem) -> Result<CellSolution> {
    let grid = problem.f1.grid();
    let len = grid.len();
    let mut xi = vec![0.0; len];
    let mut mu = 0.0;
    let Assembly { mut hess, residual: mut res, .. } = assemble(problem, &xi);
    let shifted = |r: &[f64], mu: f64| -> Vec<f64> { r.iter().map(|v| v - mu).collect() };
    let mut history = vec![norm2(&res)];
    let mut linear_iterations = 0;
    let mut contraction = PeriodicContraction::new(grid, problem.order);
    let mut x = vec![0.0; len];
    let mut delta = vec![0.0; len];
    let mut trial = vec![0.0; len];
    let mut projected = vec![0.0; len];

    for iteration in 0..=problem.max_newton {
        if sup(&res) <= problem.tol && sup(&shifted(&res, mu)) <= problem.stationarity_tol {
            let origin = xi[0];
            xi.iter_mut().for_each(|v| *v -= origin);
            return Ok(CellSolution {
                xi: PeriodicField::new(grid.clone(), xi)?,
                newton_iterations: iteration,
                linear_iterations,
                residual: sup(&res),
                compatibility: mu,
                history,
            });
        }
        if iteration == problem.max_newton {
            break;
        }

        let adj: Vec<SymMat> = hess.iter().map(|h| h.adjugate()).collect();
        let diag = contraction.diagonal(&adj);
        let scale = diag.iter().sum::<f64>() / len as f64;
        let rhs: Vec<f64> = shifted(&res, mu).iter().map(|r| -r).collect();
        x.iter_mut().for_each(|v| *v = 0.0);
        let opts = KrylovOptions { rtol: problem.linear_rtol, ..Default::default() };
        let report = bicgstab(
            |src, dst| {
                let mean = src.iter().sum::<f64>() / len as f64;
                for (p, s) in projected.iter_mut().zip(src) {
                    *p = s - mean;
                }
                contraction.apply(&adj, &projected, dst);
                dst.iter_mut().for_each(|d| *d += scale * mean);
            },
            &diag,
            &rhs,
            &mut x,
            &opts,
        );
        linear_iterations += report.iterations;
        let x_mean = x.iter().sum::<f64>() / len as f64;
        for (d, v) in delta.iter_mut().zip(&x) {
            *d = v - x_mean;
        }
        let dmu = -scale * x_mean;

        let current = history[history.len() - 1];
        let mut step = 1.0;
        let mut accepted = false;
        let mut saw_spd = false;
        for _ in 0..=problem.max_backtracks {
            for ((t, x), d) in trial.iter_mut().zip(&xi).zip(&delta) {
                *t = x + step * d;
            }
            let a = assemble(problem, &trial);
            if a.spd {
                saw_spd = true;
                let norm = norm2(&shifted(&a.residual, mu + step * dmu));
                if norm < current {
                    std::mem::swap(&mut xi, &mut trial);
                    mu += step * dmu;
                    hess = a.hess;
                    res = a.residual;
                    history.push(norm);
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            if !saw_spd {
                return Err(Error::ConvexityLoss { node: None });
            }
            return Err(Error::NonConvergence { iterations: iteration + 1, residual: sup(&res) });
        }
    }
    Err(Error::NonConvergence { iterations: problem.max_newton, residual: sup(&res) })
}
