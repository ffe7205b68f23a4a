use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::MAX_DIM;
use crate::error::{Error, Result};

/// Symmetric `n x n` matrix with `n <= 3`, stored densely.
///
/// Only one triangle is meaningful; `set` writes both entries so the
/// storage is always exactly symmetric.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<Vec<f64>>", try_from = "Vec<Vec<f64>>")]
pub struct SymMat {
    n: usize,
    a: [[f64; MAX_DIM]; MAX_DIM],
}

impl SymMat {
    pub fn zeros(n: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&n), "dimension {n} not supported");
        Self { n, a: [[0.0; MAX_DIM]; MAX_DIM] }
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar(n, 1.0)
    }

    pub fn scalar(n: usize, s: f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i][i] = s;
        }
        m
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.a[i][i] = v;
        }
        m
    }

    /// Builds a matrix from rows, rejecting asymmetry beyond `1e-12`
    /// (relative to the largest entry).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if !(1..=MAX_DIM).contains(&n) {
            return Err(Error::InvalidArgument(format!("matrix dimension {n} not in 1..=3")));
        }
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("matrix is not square".into()));
        }
        let scale = rows.iter().flatten().fold(1.0_f64, |m, v| m.max(v.abs()));
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let v = rows[i][j];
                if !v.is_finite() {
                    return Err(Error::InvalidArgument("matrix entry is not finite".into()));
                }
                if (v - rows[j][i]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidArgument(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
                m.a[i][j] = 0.5 * (v + rows[j][i]);
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i][j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i][j] = v;
        self.a[j][i] = v;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.a[i][..self.n].to_vec()).collect()
    }

    pub fn add(&self, other: &SymMat) -> SymMat {
        debug_assert_eq!(self.n, other.n);
        let mut m = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                m.a[i][j] += other.a[i][j];
            }
        }
        m
    }

    pub fn scaled(&self, s: f64) -> SymMat {
        let mut m = *self;
        for row in m.a.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        m
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.a[i][i]).sum()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0_f64;
        for i in 0..self.n {
            for j in 0..self.n {
                m = m.max(self.a[i][j].abs());
            }
        }
        m
    }

    pub fn det(&self) -> f64 {
        let a = &self.a;
        match self.n {
            1 => a[0][0],
            2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
            _ => {
                a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                    - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                    + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
            }
        }
    }

    /// Closed-form adjugate, so that `H * adj(H) = det(H) * I`.
    pub fn adjugate(&self) -> SymMat {
        let a = &self.a;
        let mut m = Self::zeros(self.n);
        match self.n {
            1 => m.a[0][0] = 1.0,
            2 => {
                m.a[0][0] = a[1][1];
                m.a[1][1] = a[0][0];
                m.set(0, 1, -a[0][1]);
            }
            _ => {
                m.a[0][0] = a[1][1] * a[2][2] - a[1][2] * a[2][1];
                m.a[1][1] = a[0][0] * a[2][2] - a[0][2] * a[2][0];
                m.a[2][2] = a[0][0] * a[1][1] - a[0][1] * a[1][0];
                m.set(0, 1, a[0][2] * a[2][1] - a[0][1] * a[2][2]);
                m.set(0, 2, a[0][1] * a[1][2] - a[0][2] * a[1][1]);
                m.set(1, 2, a[0][2] * a[1][0] - a[0][0] * a[1][2]);
            }
        }
        m
    }

    /// Lower Cholesky factor, or `None` if the matrix is not positive definite.
    pub fn cholesky(&self) -> Option<[[f64; MAX_DIM]; MAX_DIM]> {
        let n = self.n;
        let mut l = [[0.0; MAX_DIM]; MAX_DIM];
        for j in 0..n {
            let mut d = self.a[j][j];
            for k in 0..j {
                d -= l[j][k] * l[j][k];
            }
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            let d = d.sqrt();
            l[j][j] = d;
            for i in j + 1..n {
                let mut s = self.a[i][j];
                for k in 0..j {
                    s -= l[i][k] * l[j][k];
                }
                l[i][j] = s / d;
            }
        }
        Some(l)
    }

    pub fn is_spd(&self) -> bool {
        self.cholesky().is_some()
    }

    pub fn inverse(&self) -> Option<SymMat> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(self.adjugate().scaled(1.0 / det))
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> =
            self.to_dmatrix().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues().last().unwrap()
    }

    pub fn mul_vec(&self, x: &[f64]) -> [f64; MAX_DIM] {
        let mut y = [0.0; MAX_DIM];
        for i in 0..self.n {
            for j in 0..self.n {
                y[i] += self.a[i][j] * x[j];
            }
        }
        y
    }

    /// `x' M x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let y = self.mul_vec(x);
        (0..self.n).map(|i| x[i] * y[i]).sum()
    }

    /// `sum_ij M_ij N_ij`.
    pub fn contract(&self, other: &SymMat) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s += self.a[i][j] * other.a[i][j];
            }
        }
        s
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.a[i][j])
    }

    /// Symmetrizes a dense nalgebra matrix of size <= 3.
    pub fn from_dmatrix(m: &DMatrix<f64>) -> SymMat {
        let n = m.nrows();
        let mut s = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                s.set(i, j, 0.5 * (m[(i, j)] + m[(j, i)]));
            }
        }
        s
    }
}

impl From<SymMat> for Vec<Vec<f64>> {
    fn from(m: SymMat) -> Self {
        m.rows()
    }
}

impl TryFrom<Vec<Vec<f64>>> for SymMat {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        SymMat::from_rows(&rows)
    }
}

/// Symmetric positive definite matrix (verified by Cholesky on construction).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<Vec<f64>>", try_from = "Vec<Vec<f64>>")]
pub struct SpdMatrix(SymMat);

impl SpdMatrix {
    pub fn new(m: SymMat) -> Result<Self> {
        if m.is_spd() {
            Ok(Self(m))
        } else {
            Err(Error::ConvexityLoss { node: None })
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(SymMat::from_rows(rows)?)
    }

    pub fn identity(n: usize) -> Self {
        Self(SymMat::identity(n))
    }

    pub fn matrix(&self) -> &SymMat {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.n()
    }

    pub fn det(&self) -> f64 {
        self.0.det()
    }

    /// Symmetric square root via eigendecomposition.
    pub fn sqrt(&self) -> SymMat {
        self.map_eigen(f64::sqrt)
    }

    pub fn inv_sqrt(&self) -> SymMat {
        self.map_eigen(|l| 1.0 / l.sqrt())
    }

    fn map_eigen(&self, f: impl Fn(f64) -> f64) -> SymMat {
        let eig = self.0.to_dmatrix().symmetric_eigen();
        let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
        let m = &eig.eigenvectors * d * eig.eigenvectors.transpose();
        SymMat::from_dmatrix(&m)
    }
}

impl From<SpdMatrix> for Vec<Vec<f64>> {
    fn from(m: SpdMatrix) -> Self {
        m.0.rows()
    }
}

impl TryFrom<Vec<Vec<f64>>> for SpdMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        SpdMatrix::from_rows(&rows)
    }
}

impl std::ops::Deref for SpdMatrix {
    type Target = SymMat;

    fn deref(&self) -> &SymMat {
        &self.0
    }
}
