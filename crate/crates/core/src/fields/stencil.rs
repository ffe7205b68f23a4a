//! Central-difference stencils.
//!
//! `discrete_hessian` is the second-order stencil used throughout the
//! toolkit (3-point second differences, 4-point cross stencil for mixed
//! partials). Periodic grids additionally support fourth- and sixth-order
//! central stencils; the cell solver uses those.

use serde::{Deserialize, Serialize};

use super::grid::{Grid, TorusGrid};
use crate::error::{Error, Result};
use crate::linalg::SymMat;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StencilOrder {
    #[default]
    Second,
    Fourth,
    Sixth,
}

impl StencilOrder {
    /// `D2 u = sum_k c_k (u[+k] + u[-k] - 2 u) / h^2`.
    pub fn second_coeffs(self) -> &'static [f64] {
        match self {
            StencilOrder::Second => &[1.0],
            StencilOrder::Fourth => &[4.0 / 3.0, -1.0 / 12.0],
            StencilOrder::Sixth => &[3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0],
        }
    }

    /// `D1 u = sum_k d_k (u[+k] - u[-k]) / h`.
    pub fn first_coeffs(self) -> &'static [f64] {
        match self {
            StencilOrder::Second => &[0.5],
            StencilOrder::Fourth => &[2.0 / 3.0, -1.0 / 12.0],
            StencilOrder::Sixth => &[3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0],
        }
    }

    /// Coefficient of the centre node in `h^2 D2`.
    pub fn center_weight(self) -> f64 {
        -2.0 * self.second_coeffs().iter().sum::<f64>()
    }
}

/// Second-order Hessian at `node`. Fails on nodes whose stencil leaves a
/// bounded grid.
pub fn discrete_hessian<G: Grid + ?Sized>(grid: &G, values: &[f64], node: usize) -> Result<SymMat> {
    let n = grid.dim();
    let nb = |node: usize, axis: usize, off: isize| {
        grid.neighbor(node, axis, off).ok_or(Error::OutOfStencil { node })
    };
    let u0 = values[node];
    let mut hess = SymMat::zeros(n);
    for i in 0..n {
        let h = grid.spacing(i);
        let up = values[nb(node, i, 1)?];
        let um = values[nb(node, i, -1)?];
        hess.set(i, i, (up - 2.0 * u0 + um) / (h * h));
    }
    for i in 0..n {
        let p = nb(node, i, 1)?;
        let m = nb(node, i, -1)?;
        for j in i + 1..n {
            let upp = values[nb(p, j, 1)?];
            let upm = values[nb(p, j, -1)?];
            let ump = values[nb(m, j, 1)?];
            let umm = values[nb(m, j, -1)?];
            let mixed = ((upp + umm) - (upm + ump)) / (4.0 * grid.spacing(i) * grid.spacing(j));
            hess.set(i, j, mixed);
        }
    }
    Ok(hess)
}

/// Hessian at one torus node with a stencil of the requested order.
pub fn periodic_hessian(grid: &TorusGrid, values: &[f64], node: usize, order: StencilOrder) -> SymMat {
    let n = grid.dim();
    let c2 = order.second_coeffs();
    let c1 = order.first_coeffs();
    let u0 = values[node];
    let mut hess = SymMat::zeros(n);
    for i in 0..n {
        let h = grid.spacing(i);
        let mut s = 0.0;
        for (k, c) in c2.iter().enumerate() {
            let k = k as isize + 1;
            s += c * (values[grid.wrap(node, i, k)] + values[grid.wrap(node, i, -k)] - 2.0 * u0);
        }
        hess.set(i, i, s / (h * h));
        for j in i + 1..n {
            let mut s = 0.0;
            for (a, da) in c1.iter().enumerate() {
                let a = a as isize + 1;
                let p = grid.wrap(node, i, a);
                let m = grid.wrap(node, i, -a);
                let mut inner = 0.0;
                for (b, db) in c1.iter().enumerate() {
                    let b = b as isize + 1;
                    inner += db
                        * ((values[grid.wrap(p, j, b)] - values[grid.wrap(p, j, -b)])
                            - (values[grid.wrap(m, j, b)] - values[grid.wrap(m, j, -b)]));
                }
                s += da * inner;
            }
            hess.set(i, j, s / (grid.spacing(i) * grid.spacing(j)));
        }
    }
    hess
}

/// Whole-field periodic second derivative along one axis.
pub fn periodic_d2(grid: &TorusGrid, x: &[f64], axis: usize, order: StencilOrder, out: &mut [f64]) {
    let h2 = grid.spacing(axis).powi(2);
    let c = order.second_coeffs();
    let n = grid.resolution()[axis];
    let stride = grid.stride(axis);
    for (node, o) in out.iter_mut().enumerate() {
        let k = (node / stride) % n;
        let base = node - k * stride;
        let mut s = 0.0;
        for (j, cj) in c.iter().enumerate() {
            let off = j + 1;
            let kp = (k + off) % n;
            let km = (k + n - off) % n;
            s += cj * (x[base + kp * stride] + x[base + km * stride] - 2.0 * x[node]);
        }
        *o = s / h2;
    }
}

/// Whole-field periodic first derivative along one axis.
pub fn periodic_d1(grid: &TorusGrid, x: &[f64], axis: usize, order: StencilOrder, out: &mut [f64]) {
    let h = grid.spacing(axis);
    let c = order.first_coeffs();
    let n = grid.resolution()[axis];
    let stride = grid.stride(axis);
    for (node, o) in out.iter_mut().enumerate() {
        let k = (node / stride) % n;
        let base = node - k * stride;
        let mut s = 0.0;
        for (j, cj) in c.iter().enumerate() {
            let off = j + 1;
            let kp = (k + off) % n;
            let km = (k + n - off) % n;
            s += cj * (x[base + kp * stride] - x[base + km * stride]);
        }
        *o = s / h;
    }
}

/// Hessian at every torus node; mixed entries are `D1_i (D1_j u)`.
pub fn periodic_hessian_field(grid: &TorusGrid, values: &[f64], order: StencilOrder) -> Vec<SymMat> {
    let n = grid.dim();
    let len = grid.len();
    let mut out = vec![SymMat::zeros(n); len];
    let mut buf = vec![0.0; len];
    let mut buf2 = vec![0.0; len];
    for i in 0..n {
        periodic_d2(grid, values, i, order, &mut buf);
        for (m, v) in out.iter_mut().zip(&buf) {
            m.set(i, i, *v);
        }
    }
    for j in 1..n {
        periodic_d1(grid, values, j, order, &mut buf);
        for i in 0..j {
            periodic_d1(grid, &buf, i, order, &mut buf2);
            for (m, v) in out.iter_mut().zip(&buf2) {
                m.set(i, j, *v);
            }
        }
    }
    out
}

/// Work buffers for [`PeriodicContraction::apply`].
pub struct PeriodicContraction<'a> {
    grid: &'a TorusGrid,
    order: StencilOrder,
    d1: Vec<f64>,
    tmp: Vec<f64>,
}

impl<'a> PeriodicContraction<'a> {
    pub fn new(grid: &'a TorusGrid, order: StencilOrder) -> Self {
        let len = grid.len();
        Self { grid, order, d1: vec![0.0; len], tmp: vec![0.0; len] }
    }

    /// `out = sum_ij coeff_ij D_ij x` with the same stencils as
    /// [`periodic_hessian_field`].
    pub fn apply(&mut self, coeffs: &[SymMat], x: &[f64], out: &mut [f64]) {
        let n = self.grid.dim();
        out.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            periodic_d2(self.grid, x, i, self.order, &mut self.tmp);
            for ((o, c), v) in out.iter_mut().zip(coeffs).zip(&self.tmp) {
                *o += c.get(i, i) * v;
            }
        }
        for j in 1..n {
            periodic_d1(self.grid, x, j, self.order, &mut self.d1);
            for i in 0..j {
                periodic_d1(self.grid, &self.d1, i, self.order, &mut self.tmp);
                for ((o, c), v) in out.iter_mut().zip(coeffs).zip(&self.tmp) {
                    *o += 2.0 * c.get(i, j) * v;
                }
            }
        }
    }

    /// Diagonal of the contraction operator (mixed stencils have no centre term).
    pub fn diagonal(&self, coeffs: &[SymMat]) -> Vec<f64> {
        let w = self.order.center_weight();
        coeffs
            .iter()
            .map(|c| (0..self.grid.dim()).map(|i| w * c.get(i, i) / self.grid.spacing(i).powi(2)).sum())
            .collect()
    }
}
