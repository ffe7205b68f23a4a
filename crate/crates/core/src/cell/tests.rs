use std::f64::consts::PI;

use crate::cell::{cell_residual, solve_spatial_corrector, CellProblem};
use crate::fields::{periodic_hessian_field, Grid, PeriodicField, SampleOptions, StencilOrder, TorusGrid};
use crate::linalg::SpdMatrix;

fn density(x: &[f64]) -> f64 {
    1.0 + 0.3 * (2.0 * PI * x[0]).cos() * (2.0 * PI * x[1]).cos()
}

fn problem(points: usize, f: impl Fn(&[f64]) -> f64) -> CellProblem {
    let grid = TorusGrid::unit(2, points).unwrap();
    let f1 = PeriodicField::sample(&grid, f, SampleOptions::default()).unwrap();
    CellProblem::new(SpdMatrix::identity(2), f1, 1e-8).unwrap()
}

#[test]
fn two_dimensional_refinement_agreement() {
    let coarse = solve_spatial_corrector(&problem(64, density)).unwrap();
    let fine = solve_spatial_corrector(&problem(128, density)).unwrap();
    assert!(coarse.newton_iterations <= 30);
    assert!(coarse.residual <= 1e-8);

    let g = coarse.xi.grid();
    let gf = fine.xi.grid();
    let mut worst = 0.0_f64;
    for node in 0..g.len() {
        let idx = g.multi_index(node);
        let fine_node = gf.flat_index(&[2 * idx[0], 2 * idx[1]]);
        worst = worst.max((coarse.xi.values()[node] - fine.xi.values()[fine_node]).abs());
    }
    assert!(worst <= 1e-3, "coarse/fine disagreement {worst}");
}

#[test]
fn converged_corrector_is_convex_and_history_decreases() {
    let p = problem(64, density);
    let s = solve_spatial_corrector(&p).unwrap();
    for pair in s.history.windows(2) {
        assert!(pair[1] < pair[0]);
    }
    let hess = periodic_hessian_field(s.xi.grid(), s.xi.values(), StencilOrder::Sixth);
    assert!(hess.iter().all(|h| h.add(p.b.matrix()).is_spd()));
    // residual holds on the seams too: the wrapped stencils are used everywhere
    let r = cell_residual(&p, s.xi.values());
    assert!(r.iter().all(|v| v.abs() <= 1e-8));
}

#[test]
fn translation_equivariance() {
    let h = 1.0 / 32.0;
    let solve = |mut p: CellProblem| {
        p.stationarity_tol = 1e-13;
        solve_spatial_corrector(&p).unwrap()
    };
    let base = solve(problem(32, density));
    let moved = solve(problem(32, |x| density(&[x[0] + h, x[1]])));
    let center = |f: &PeriodicField| {
        let m = f.mean();
        f.values().iter().map(|v| v - m).collect::<Vec<_>>()
    };
    let expected = center(&base.xi.shifted(&[1, 0]));
    let got = center(&moved.xi);
    for (a, b) in expected.iter().zip(&got) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}
