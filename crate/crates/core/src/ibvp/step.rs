use crate::error::{Error, Result};
use crate::fields::{discrete_hessian, BoxGrid, Grid};
use crate::linalg::{bicgstab, norm2, KrylovOptions, SymMat};

/// Newton controls for one implicit step.
#[derive(Clone, Debug)]
pub struct StepOptions {
    /// Sup-norm target for `(u_prev - u) det D^2 u / dt - f` on interior nodes.
    pub tol: f64,
    pub max_newton: usize,
    pub max_backtracks: usize,
    pub linear_rtol: f64,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_newton: 50, max_backtracks: 30, linear_rtol: 1e-3 }
    }
}

#[derive(Clone, Debug)]
pub struct StepReport {
    pub u: Vec<f64>,
    pub newton_iterations: usize,
    pub residual: f64,
}

struct State {
    hess: Vec<SymMat>,
    residual: Vec<f64>,
}

/// Hessians and residuals on interior nodes, or `None` if some Hessian is
/// not SPD or some interior value fails to drop below `u_prev`.
fn assemble(grid: &BoxGrid, interior: &[usize], u: &[f64], u_prev: &[f64], f: &[f64], dt: f64) -> Option<State> {
    let mut hess = Vec::with_capacity(interior.len());
    let mut residual = Vec::with_capacity(interior.len());
    for &node in interior {
        let h = discrete_hessian(grid, u, node).expect("interior node");
        let drop = u_prev[node] - u[node];
        if !(drop > 0.0) || !h.is_spd() {
            return None;
        }
        residual.push(drop * h.det() / dt - f[node]);
        hess.push(h);
    }
    Some(State { hess, residual })
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Starting iterate: explicit predictor `u_prev - dt f / det D^2 u_prev`
/// where `u_prev` is strictly convex, otherwise `u_prev` plus a convex bowl
/// vanishing on the faces, scaled up until every interior Hessian is SPD.
fn initial_guess(
    grid: &BoxGrid,
    interior: &[usize],
    u_prev: &[f64],
    f: &[f64],
    boundary: &[f64],
    dt: f64,
) -> Result<(Vec<f64>, State)> {
    let mut u = boundary.to_vec();
    let mut predictor_ok = true;
    for &node in interior {
        let h = discrete_hessian(grid, u_prev, node)?;
        if h.is_spd() {
            u[node] = u_prev[node] - dt * f[node] / h.det();
        } else {
            predictor_ok = false;
            break;
        }
    }
    if predictor_ok {
        if let Some(state) = assemble(grid, interior, &u, u_prev, f, dt) {
            return Ok((u, state));
        }
    }

    // -(prod_i sin(pi s_i))^(1/n) with s the box-normalized coordinates is
    // convex, vanishes on the boundary, and stays discretely convex up to the
    // faces (a truncated paraboloid does not near the corners).
    let n = grid.dim();
    let bowl = |x: &[f64]| -> f64 {
        let p: f64 = (0..n)
            .map(|a| (std::f64::consts::PI * (x[a] - grid.lower()[a]) / (grid.upper()[a] - grid.lower()[a])).sin().abs())
            .product();
        -p.powf(1.0 / n as f64)
    };
    let width = (0..n).map(|a| grid.upper()[a] - grid.lower()[a]).fold(0.0_f64, f64::max);
    let f_max = interior.iter().map(|&i| f[i]).fold(0.0_f64, f64::max);
    let mut c = (dt * f_max * width.powi(2 * n as i32)).powf(1.0 / (n as f64 + 1.0));
    for _ in 0..60 {
        for &node in interior {
            u[node] = u_prev[node] + c * bowl(&grid.coord(node));
        }
        if let Some(state) = assemble(grid, interior, &u, u_prev, f, dt) {
            return Ok((u, state));
        }
        c *= 2.0;
    }
    Err(Error::ConvexityLoss { node: None })
}

/// One backward-Euler step `(u_prev - u) det D^2 u = dt f` with `u = boundary`
/// on boundary nodes, solved by damped Newton on the interior.
///
/// Interior iterates always stay strictly convex and strictly below `u_prev`.
pub fn implicit_step(
    grid: &BoxGrid,
    u_prev: &[f64],
    f_now: &[f64],
    boundary: &[f64],
    dt: f64,
    opts: &StepOptions,
) -> Result<StepReport> {
    let len = grid.len();
    if u_prev.len() != len || f_now.len() != len || boundary.len() != len {
        return Err(Error::GridMismatch("step data does not match the grid".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument("time step must be positive".into()));
    }
    let interior = grid.interior_nodes();
    let (mut u, mut state) = initial_guess(grid, &interior, u_prev, f_now, boundary, dt)?;
    let mut current = norm2(&state.residual);

    let mut slot = vec![usize::MAX; len];
    for (k, &node) in interior.iter().enumerate() {
        slot[node] = k;
    }
    let mut delta = vec![0.0; len];
    let mut trial = vec![0.0; len];

    for iteration in 0..=opts.max_newton {
        if sup(&state.residual) <= opts.tol {
            return Ok(StepReport { u, newton_iterations: iteration, residual: sup(&state.residual) });
        }
        if iteration == opts.max_newton {
            break;
        }

        // J d = (1/dt) [-det d + (u_prev - u) adj : D^2 d] on interior rows,
        // identity on boundary rows.
        let adj: Vec<SymMat> = state.hess.iter().map(|h| h.adjugate()).collect();
        let det: Vec<f64> = state.hess.iter().map(|h| h.det()).collect();
        let drop: Vec<f64> = interior.iter().map(|&i| u_prev[i] - u[i]).collect();
        let mut diag = vec![1.0; len];
        for (k, &node) in interior.iter().enumerate() {
            let lap: f64 = (0..grid.dim()).map(|a| -2.0 * adj[k].get(a, a) / grid.spacing(a).powi(2)).sum();
            diag[node] = (-det[k] + drop[k] * lap) / dt;
        }
        let mut rhs = vec![0.0; len];
        for (k, &node) in interior.iter().enumerate() {
            rhs[node] = -state.residual[k];
        }
        let apply = |x: &[f64], y: &mut [f64]| {
            for (node, out) in y.iter_mut().enumerate() {
                let k = slot[node];
                if k == usize::MAX {
                    *out = x[node];
                } else {
                    let h = discrete_hessian(grid, x, node).expect("interior node");
                    *out = (-det[k] * x[node] + drop[k] * adj[k].contract(&h)) / dt;
                }
            }
        };
        delta.iter_mut().for_each(|v| *v = 0.0);
        let kopts = KrylovOptions { rtol: opts.linear_rtol, ..Default::default() };
        bicgstab(apply, &diag, &rhs, &mut delta, &kopts);

        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_backtracks {
            for ((t, x), d) in trial.iter_mut().zip(&u).zip(&delta) {
                *t = x + step * d;
            }
            if let Some(s) = assemble(grid, &interior, &trial, u_prev, f_now, dt) {
                let norm = norm2(&s.residual);
                if norm < current {
                    std::mem::swap(&mut u, &mut trial);
                    state = s;
                    current = norm;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            return Err(Error::NonConvergence { iterations: iteration + 1, residual: sup(&state.residual) });
        }
    }
    Err(Error::NonConvergence { iterations: opts.max_newton, residual: sup(&state.residual) })
}
