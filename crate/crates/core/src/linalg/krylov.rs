use super::{dot, norm2, subtract_mean};

#[derive(Clone, Debug)]
pub struct KrylovOptions {
    /// Stop once `||b - A x|| <= rtol * ||b||`.
    pub rtol: f64,
    pub max_iter: usize,
    /// Recompute the true residual and restart after this many iterations.
    pub restart: usize,
    /// Keep every iterate on the mean-zero subspace.
    pub mean_zero: bool,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self { rtol: 1e-8, max_iter: 2000, restart: 200, mean_zero: false }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KrylovReport {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Right-preconditioned BiCGSTAB with a diagonal (Jacobi) preconditioner.
///
/// `apply(x, y)` must write `A x` into `y`. The iteration restarts from the
/// true residual on breakdown and every `opts.restart` iterations.
pub fn bicgstab<F>(
    mut apply: F,
    diag: &[f64],
    b: &[f64],
    x: &mut [f64],
    opts: &KrylovOptions,
) -> KrylovReport
where
    F: FnMut(&[f64], &mut [f64]),
{
    let len = b.len();
    let inv_diag: Vec<f64> =
        diag.iter().map(|&d| if d != 0.0 && d.is_finite() { 1.0 / d } else { 1.0 }).collect();
    let precondition = |src: &[f64], dst: &mut [f64]| {
        for i in 0..len {
            dst[i] = src[i] * inv_diag[i];
        }
        if opts.mean_zero {
            subtract_mean(dst);
        }
    };

    if opts.mean_zero {
        subtract_mean(x);
    }
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return KrylovReport { iterations: 0, residual: 0.0, converged: true };
    }
    let target = opts.rtol * b_norm;

    let mut r = vec![0.0; len];
    let mut r_hat = vec![0.0; len];
    let mut p = vec![0.0; len];
    let mut v = vec![0.0; len];
    let mut y = vec![0.0; len];
    let mut z = vec![0.0; len];
    let mut s = vec![0.0; len];
    let mut t = vec![0.0; len];

    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    'outer: while iterations < opts.max_iter {
        // (re)start from the true residual
        apply(x, &mut r);
        for i in 0..len {
            r[i] = b[i] - r[i];
        }
        residual = norm2(&r);
        if residual <= target {
            return KrylovReport { iterations, residual, converged: true };
        }
        r_hat.copy_from_slice(&r);
        p.iter_mut().for_each(|e| *e = 0.0);
        v.iter_mut().for_each(|e| *e = 0.0);
        let (mut rho, mut alpha, mut omega) = (1.0_f64, 1.0_f64, 1.0_f64);

        for _ in 0..opts.restart {
            if iterations >= opts.max_iter {
                break 'outer;
            }
            iterations += 1;
            let rho_new = dot(&r_hat, &r);
            if rho_new.abs() < 1e-300 || omega == 0.0 {
                continue 'outer;
            }
            let beta = (rho_new / rho) * (alpha / omega);
            rho = rho_new;
            for i in 0..len {
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
            }
            precondition(&p, &mut y);
            apply(&y, &mut v);
            let denom = dot(&r_hat, &v);
            if denom.abs() < 1e-300 {
                continue 'outer;
            }
            alpha = rho / denom;
            for i in 0..len {
                s[i] = r[i] - alpha * v[i];
            }
            let s_norm = norm2(&s);
            if s_norm <= target {
                for i in 0..len {
                    x[i] += alpha * y[i];
                }
                residual = s_norm;
                return KrylovReport { iterations, residual, converged: true };
            }
            precondition(&s, &mut z);
            apply(&z, &mut t);
            let tt = dot(&t, &t);
            if tt == 0.0 {
                continue 'outer;
            }
            omega = dot(&t, &s) / tt;
            for i in 0..len {
                x[i] += alpha * y[i] + omega * z[i];
                r[i] = s[i] - omega * t[i];
            }
            residual = norm2(&r);
            if residual <= target {
                return KrylovReport { iterations, residual, converged: true };
            }
        }
    }
    KrylovReport { iterations, residual, converged: residual <= target }
}
