use serde::{Deserialize, Serialize};

use super::spatial::{solve_spatial_corrector, CellProblem, CellSolution};
use super::temporal::{temporal_corrector, TemporalCorrector};
use crate::error::{Error, Result};
use crate::fields::{Grid, PeriodicField};
use crate::function::SpaceTimeFunction;
use crate::linalg::SpdMatrix;

/// `u = gamma - tau t + x'Ax / 2 + b.x + xi1(x) + xi2(t)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AncientSolution {
    pub tau: f64,
    pub a: SpdMatrix,
    pub b: Vec<f64>,
    pub gamma: f64,
    /// Spatial corrector with `xi1(0) = 0`, interpolated multilinearly.
    pub xi1: PeriodicField,
    pub xi2: TemporalCorrector,
}

impl AncientSolution {
    /// Spatial periods `a_1..a_n`.
    pub fn periods(&self) -> &[f64] {
        self.xi1.grid().periods()
    }

    /// Temporal period `a_0`.
    pub fn time_period(&self) -> f64 {
        self.xi2.period()
    }

    /// `m1 = tau * min f2`.
    pub fn m1(&self) -> f64 {
        self.tau * self.xi2.f2_min()
    }

    /// `m2 = tau * max f2`.
    pub fn m2(&self) -> f64 {
        self.tau * self.xi2.f2_max()
    }

    /// Quadratic-plus-affine part `x'Ax / 2 + b.x`.
    pub fn quadratic(&self, x: &[f64]) -> f64 {
        let n = self.a.n();
        0.5 * self.a.quad_form(&x[..n]) + self.b.iter().zip(x).map(|(b, x)| b * x).sum::<f64>()
    }

    /// Periodic part `v = gamma + xi1 + xi2`.
    pub fn periodic_part(&self, x: &[f64], t: f64) -> f64 {
        self.gamma + self.xi1.interpolate(x) + self.xi2.value(t)
    }
}

impl SpaceTimeFunction for AncientSolution {
    fn dim(&self) -> usize {
        self.a.n()
    }

    fn value(&self, x: &[f64], t: f64) -> f64 {
        -self.tau * t + self.quadratic(x) + self.periodic_part(x, t)
    }
}

/// Solves both cell problems and assembles the ancient solution.
///
/// `f1` must have unit mean on its torus; `f2` holds samples of one temporal
/// period `[-a0, 0)` with unit mean. `tau` is fixed by `tau det A = mean(f1 f2)`.
pub fn build_ancient(
    a: &SpdMatrix,
    b: &[f64],
    gamma: f64,
    f1: &PeriodicField,
    f2: &[f64],
    a0: f64,
    tol: f64,
) -> Result<(AncientSolution, CellSolution)> {
    let n = a.n();
    if b.len() != n {
        return Err(Error::InvalidArgument(format!("b has {} entries, expected {n}", b.len())));
    }
    let problem = CellProblem::new(a.clone(), f1.clone(), tol)?;
    let cell = solve_spatial_corrector(&problem)?;
    let tau = space_time_mean(f1, f2) / a.det();
    let xi2 = temporal_corrector(tau, f2, a0)?;
    let sol = AncientSolution { tau, a: a.clone(), b: b.to_vec(), gamma, xi1: cell.xi.clone(), xi2 };
    Ok((sol, cell))
}

/// Trapezoid mean of `f1(x) f2(t)` over one space-time cell.
fn space_time_mean(f1: &PeriodicField, f2: &[f64]) -> f64 {
    let mut sum = 0.0;
    for &g in f2 {
        sum += f1.values().iter().map(|f| f * g).sum::<f64>();
    }
    sum / (f1.grid().len() * f2.len()) as f64
}

/// `|tau det A - mean(f1 f2)|`.
pub fn mean_identity_check(sol: &AncientSolution, f1: &PeriodicField, f2: &[f64]) -> f64 {
    (sol.tau * sol.a.det() - space_time_mean(f1, f2)).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell::sample_period;
    use crate::fields::{SampleOptions, TorusGrid};
    use std::f64::consts::PI;

    fn unit_f1(n: usize) -> PeriodicField {
        PeriodicField::constant(TorusGrid::unit(n, 16).unwrap(), 1.0)
    }

    #[test]
    fn trivial_data_gives_paraboloid() {
        let (sol, _) = build_ancient(&SpdMatrix::identity(2), &[0.0, 0.0], 0.0, &unit_f1(2), &[1.0; 8], 1.0, 1e-10)
            .unwrap();
        assert_eq!(sol.tau, 1.0);
        let u = sol.value(&[0.3, -0.7], -0.4);
        assert!((u - (0.4 + 0.5 * (0.09 + 0.49))).abs() < 1e-15);
        assert!(mean_identity_check(&sol, &unit_f1(2), &[1.0; 8]) < 1e-15);
    }

    #[test]
    fn unit_determinant_keeps_tau() {
        let a = SpdMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 0.5]]).unwrap();
        let (sol, _) = build_ancient(&a, &[0.0, 0.0], 0.0, &unit_f1(2), &[1.0; 8], 1.0, 1e-10).unwrap();
        assert_eq!(sol.tau, 1.0);
        assert!((sol.value(&[1.0, 2.0], -1.0) - (1.0 + 1.0 + 1.0)).abs() < 1e-14);
    }

    #[test]
    fn nontrivial_build_and_corrupted_tau() {
        let a = SpdMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let grid = TorusGrid::unit(2, 64).unwrap();
        let f1 = PeriodicField::sample(
            &grid,
            |x| 1.0 + 0.3 * (2.0 * PI * x[0]).cos() * (2.0 * PI * x[1]).cos(),
            SampleOptions::default(),
        )
        .unwrap();
        let f2 = sample_period(|t| 1.0 + 0.5 * (2.0 * PI * t).sin(), 1.0, 64);
        let (mut sol, cell) = build_ancient(&a, &[0.3, -0.1], 0.0, &f1, &f2, 1.0, 1e-9).unwrap();
        assert!(cell.residual <= 1e-9);
        assert!((sol.tau - 1.0 / 1.75).abs() < 1e-14);
        assert!(mean_identity_check(&sol, &f1, &f2) < 1e-10);
        assert_eq!(sol.xi1.values()[0], 0.0);

        sol.tau *= 1.01;
        let d = mean_identity_check(&sol, &f1, &f2);
        assert!((d - 0.01).abs() < 1e-12);
    }
}
