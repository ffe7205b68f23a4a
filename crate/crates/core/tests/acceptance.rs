//! Runs every acceptance criterion, prints one PASS/FAIL line per criterion
//! and exits nonzero if any failed.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use pampere::cell::{build_ancient, mean_identity_check, sample_period, solve_spatial_corrector, AncientSolution, CellProblem};
use pampere::fields::{BoxGrid, Grid, PeriodicField, SampleOptions, SpaceTimeField, SpatialGrid, TimeGrid, TorusGrid};
use pampere::ibvp::{fit_rate, solve_ibvp, sweep, HomogenizationBase, IbvpProblem, StepOptions};
use pampere::linalg::{SpdMatrix, SymMat};
use pampere::liouville::*;
use pampere::mongeampere::{barrier_eval, pma_residual, BarrierSpec};
use pampere::{FnFunction, Result, SpaceTimeFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Check {
    lines: Vec<String>,
    pass: bool,
}

impl Check {
    fn new() -> Self {
        Self { lines: Vec::new(), pass: true }
    }

    fn expect(&mut self, ok: bool, what: String) {
        self.pass &= ok;
        self.lines.push(format!("{}{what}", if ok { "" } else { "!! " }));
    }

    fn note(&mut self, what: String) {
        self.lines.push(what);
    }
}

fn f1_expr(amp: f64) -> impl Fn(&[f64]) -> f64 {
    move |x: &[f64]| 1.0 + amp * (2.0 * PI * x[0]).cos() * (2.0 * PI * x[1]).cos()
}

fn f2_expr(t: f64) -> f64 {
    1.0 + 0.5 * (2.0 * PI * t).sin()
}

fn ancient(points: usize, time_samples: usize, tol: f64) -> Result<AncientSolution> {
    let grid = TorusGrid::unit(2, points)?;
    let f1 = PeriodicField::sample(&grid, f1_expr(0.3), SampleOptions::default())?;
    let f2 = sample_period(f2_expr, 1.0, time_samples);
    let a = SpdMatrix::from_rows(&[vec![1.2, 0.3], vec![0.3, 0.9]])?;
    Ok(build_ancient(&a, &[0.4, -0.2], 1.5, &f1, &f2, 1.0, tol)?.0)
}

fn mean_identity() -> Result<Check> {
    let mut c = Check::new();
    let start = Instant::now();
    let (mut worst_identity, mut worst_fit) = (0.0f64, 0.0f64);
    for seed in 1..=5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = [[rng.random_range(0.8..1.2), 0.0], [rng.random_range(-0.3..0.3), rng.random_range(0.8..1.2)]];
        let a = SymMat::from_rows(&[
            vec![l[0][0] * l[0][0], l[0][0] * l[1][0]],
            vec![l[0][0] * l[1][0], l[1][0] * l[1][0] + l[1][1] * l[1][1]],
        ])?;
        let a = SpdMatrix::new(a)?;
        let b = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let gamma = rng.random_range(-2.0..2.0);
        let (amp, phase) = (rng.random_range(0.1..0.3), rng.random_range(0.0..1.0));
        let (amp2, phase2) = (rng.random_range(0.1..0.5), rng.random_range(0.0..1.0));
        let grid = TorusGrid::unit(2, 64)?;
        let f1 = PeriodicField::sample(
            &grid,
            |x| 1.0 + amp * (2.0 * PI * (x[0] + phase)).cos() * (2.0 * PI * x[1]).cos(),
            SampleOptions::default(),
        )?;
        let f2 = sample_period(|t| 1.0 + amp2 * (2.0 * PI * (t + phase2)).sin(), 1.0, 64);
        let (sol, _) = build_ancient(&a, &b, gamma, &f1, &f2, 1.0, 1e-8)?;
        worst_identity = worst_identity.max(mean_identity_check(&sol, &f1, &f2));
        let fit = fit_decomposition(&sol, &[1.0, 1.0], 1.0, None, &FitOptions::default())?;
        let mut err = (fit.tau - sol.tau).abs().max((fit.gamma - gamma).abs());
        for i in 0..2 {
            err = err.max((fit.b[i] - b[i]).abs());
            for j in 0..2 {
                err = err.max((fit.a.get(i, j) - a.get(i, j)).abs());
            }
        }
        worst_fit = worst_fit.max(err);
    }
    let secs = start.elapsed().as_secs_f64();
    c.expect(worst_identity <= 1e-10, format!("max |tau det A - mean f| = {worst_identity:.2e} (<= 1e-10)"));
    c.expect(worst_fit <= 1e-8, format!("max fit error on (tau, A, b, gamma) = {worst_fit:.2e} (<= 1e-8)"));
    c.expect(secs <= 60.0, format!("5 configs in {secs:.1} s (<= 60 s)"));
    Ok(c)
}

fn cell_solver() -> Result<Check> {
    let mut c = Check::new();
    let grid = TorusGrid::unit(1, 256)?;
    let f1 = PeriodicField::sample(&grid, |x| 1.0 + 0.5 * (2.0 * PI * x[0]).cos(), SampleOptions::default())?;
    let sol = solve_spatial_corrector(&CellProblem::new(SpdMatrix::identity(1), f1, 1e-10)?)?;
    let err = (0..grid.len())
        .map(|k| {
            let x = grid.coord(k)[0];
            (sol.xi.values()[k] - (1.0 - (2.0 * PI * x).cos()) / (8.0 * PI * PI)).abs()
        })
        .fold(0.0, f64::max);
    c.expect(err <= 1e-6, format!("1D closed form error {err:.2e} on N=256 (<= 1e-6)"));

    let start = Instant::now();
    let grid = TorusGrid::unit(2, 64)?;
    let f1 = PeriodicField::sample(&grid, f1_expr(0.3), SampleOptions::default())?;
    let sol = solve_spatial_corrector(&CellProblem::new(SpdMatrix::identity(2), f1, 1e-8)?)?;
    let secs = start.elapsed().as_secs_f64();
    c.expect(sol.newton_iterations <= 30, format!("2D: {} Newton iterations (<= 30)", sol.newton_iterations));
    c.expect(sol.residual <= 1e-8, format!("2D residual {:.2e} (<= 1e-8)", sol.residual));
    c.expect(secs <= 60.0, format!("2D solve {secs:.1} s (<= 60 s)"));
    Ok(c)
}

fn exact_residual() -> Result<Check> {
    let mut c = Check::new();
    let tol = 1e-8;
    let sol = ancient(128, 4096, tol)?;
    let f1 = f1_expr(0.3);
    let mut sups = Vec::new();
    for cells in [32usize, 64] {
        let h = 1.0 / cells as f64;
        let dt = h * h;
        let grid: SpatialGrid = BoxGrid::cube(2, 0.0, 1.0, cells)?.into();
        let time = TimeGrid::with_step(-8.0 * dt, dt, None)?;
        let u = SpaceTimeField::sample(grid.clone(), time.clone(), |x, t| sol.value(x, t))?;
        let f = SpaceTimeField::sample(grid, time, |x, t| f1(x) * f2_expr(t))?;
        sups.push(pma_residual(&u, &f)?.sup);
    }
    let floor = 10.0 * tol;
    let part = |r: f64| (r - floor).max(0.0);
    let ratio = part(sups[0]) / part(sups[1]);
    c.expect(
        sups[1] <= floor + sups[0],
        format!("residual sup {:.3e} (h=1/32), {:.3e} (h=1/64); floor 10 tol = {floor:.0e}", sups[0], sups[1]),
    );
    c.expect(ratio >= 3.0, format!("h^2 part shrinks by {ratio:.2} when h halves (>= 3)"));
    Ok(c)
}

fn lattice_quotients(sol: &AncientSolution) -> Result<Check> {
    let mut c = Check::new();
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut worst = 0.0f64;
    for e in LatticeDirectionSet::standard(&[1.0, 1.0]).vectors() {
        let exact = sol.a.quad_form(&e) / (e[0] * e[0] + e[1] * e[1]);
        for _ in 0..100 {
            let x = [rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)];
            let q = second_diff_quotient(sol, &e, &x, rng.random_range(-3.0..0.0))?;
            worst = worst.max((q - exact).abs());
        }
    }
    c.expect(worst <= 1e-10, format!("lattice quotients a1e1, a2e2, a1e1+a2e2: max deviation {worst:.2e} (<= 1e-10)"));

    // 10^4 random lattice directions and points against the bound, then 10^4
    // arbitrary directions for strict positivity.
    let (mut excess, mut min_q, mut min_any) = (f64::NEG_INFINITY, f64::INFINITY, f64::INFINITY);
    let mut beyond = 0.0f64;
    for _ in 0..10_000 {
        let k = loop {
            let k = [rng.random_range(-3i64..=3), rng.random_range(-3i64..=3)];
            if k != [0, 0] {
                break k;
            }
        };
        let e = [k[0] as f64, k[1] as f64];
        let bound = sol.a.quad_form(&e) / (e[0] * e[0] + e[1] * e[1]);
        let x = [rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)];
        let t = rng.random_range(-3.0..0.0);
        let q = second_diff_quotient(sol, &e, &x, t)?;
        excess = excess.max(q - bound);
        min_q = min_q.min(q);

        let e = loop {
            let e = [rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)];
            if e[0] * e[0] + e[1] * e[1] >= 0.0025 {
                break e;
            }
        };
        let q = second_diff_quotient(sol, &e, &x, t)?;
        min_any = min_any.min(q);
        beyond = beyond.max(q - sol.a.quad_form(&e) / (e[0] * e[0] + e[1] * e[1]));
    }
    c.expect(excess <= 1e-6, format!("10^4 lattice samples: max (quotient - bound) = {excess:.2e} (<= 1e-6)"));
    c.expect(min_q > 0.0 && min_any > 0.0, format!("strictly positive: min {min_q:.3} (lattice), {min_any:.3} (arbitrary e)"));
    c.note(format!("info: arbitrary non-lattice e exceed e'Ae/|e|^2 by up to {beyond:.2e}"));
    Ok(c)
}

fn time_quotients(sol: &AncientSolution) -> Result<Check> {
    let mut c = Check::new();
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for k in [1.0, 2.0, 3.0] {
        for _ in 0..50 {
            let x = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let q = time_diff_quotient(sol, k, &x, rng.random_range(-2.0..0.0))?;
            worst = worst.max((q + sol.tau).abs());
        }
    }
    c.expect(worst <= 1e-12, format!("k in {{a0, 2a0, 3a0}}: max |quotient + tau| = {worst:.2e} (<= 1e-12)"));
    let (lo, hi) = (-sol.tau * 1.5, -sol.tau * 0.5);
    let mut outside = 0;
    for _ in 0..10_000 {
        let k = rng.random_range(1e-3..3.0);
        let x = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
        let q = time_diff_quotient(sol, k, &x, rng.random_range(-2.0..0.0))?;
        if q < lo || q > hi {
            outside += 1;
        }
    }
    c.expect(outside == 0, format!("10^4 arbitrary k: {outside} quotients outside [-tau max f2, -tau min f2]"));
    Ok(c)
}

fn subsolution(sol: &AncientSolution) -> Result<Check> {
    let mut c = Check::new();
    // -t + x1^2/(2s) + s^3/6 with s = 2 - x2 has det D^2u = 1 and f = 1.
    let exact = FnFunction::new(2, |x: &[f64], t: f64| {
        let s = 2.0 - x[1];
        -t + x[0] * x[0] / (2.0 * s) + s * s * s / 6.0
    });
    let e = [0.37, 0.23];
    let mut mins = Vec::new();
    for cells in [64usize, 128] {
        let h = 1.0 / cells as f64;
        let grid = BoxGrid::cube(2, -0.5, 0.5, cells)?;
        let time = TimeGrid::with_step(-4.0 * h, h, None)?;
        mins.push(check_quotient_subsolution(&exact, &e, &grid, &time)?.min);
    }
    c.expect(mins[0] >= -1e-4, format!("non-lattice e on exact solution: min {:.3e} at h=1/64 (>= -1e-4)", mins[0]));
    let neg = |m: f64| (-m).max(0.0);
    c.expect(
        neg(mins[1]) <= neg(mins[0]) + 1e-12,
        format!("refined min {:.3e} at h=1/128: negative part does not grow", mins[1]),
    );
    let mut lattice_min = f64::INFINITY;
    for cells in [64usize, 128] {
        let h = 1.0 / cells as f64;
        let grid = BoxGrid::cube(2, 0.0, 1.0, cells)?;
        let time = TimeGrid::with_step(-4.0 * h, h, None)?;
        for e in LatticeDirectionSet::standard(&[1.0, 1.0]).vectors() {
            lattice_min = lattice_min.min(check_quotient_subsolution(sol, &e, &grid, &time)?.min);
        }
    }
    c.expect(lattice_min >= -1e-4, format!("lattice e on ancient solution: min {lattice_min:.3e} (>= -1e-4)"));
    Ok(c)
}

/// Max trajectory errors of the IBVP against `sol` on `[0, 1]^2` over
/// `[-0.5, 0]` with `dt = h / 2`; also returns the time of the finest solve.
fn refinement(sol: Arc<AncientSolution>, f2: fn(f64) -> f64, cells: &[usize]) -> Result<(Vec<f64>, f64)> {
    let mut errors = Vec::new();
    let mut secs = 0.0;
    for &cells in cells {
        let h = 1.0 / cells as f64;
        let grid = BoxGrid::cube(2, 0.0, 1.0, cells)?;
        let time = TimeGrid::with_step(-0.5, 0.5 * h, None)?;
        let f1 = f1_expr(0.3);
        let f = Arc::new(FnFunction::new(2, move |x: &[f64], t: f64| f1(x) * f2(t)));
        let start = Instant::now();
        let out = solve_ibvp(&IbvpProblem::new(grid.clone(), time.clone(), f, sol.clone()))?;
        secs = start.elapsed().as_secs_f64();
        let exact = SpaceTimeField::sample(grid.into(), time, |x, t| sol.value(x, t))?;
        errors.push(out.u.max_abs_diff(&exact)?);
    }
    Ok((errors, secs))
}

fn ibvp_convergence() -> Result<Check> {
    let mut c = Check::new();
    // Nontrivial in space, linear in time: the refinement sees the h^2 part.
    let grid = TorusGrid::unit(2, 128)?;
    let f1 = PeriodicField::sample(&grid, f1_expr(0.3), SampleOptions::default())?;
    let a = SpdMatrix::from_rows(&[vec![1.2, 0.3], vec![0.3, 0.9]])?;
    let steady = Arc::new(build_ancient(&a, &[0.4, -0.2], 1.5, &f1, &[1.0; 16], 1.0, 1e-10)?.0);
    let (errors, secs) = refinement(steady, |_| 1.0, &[16, 32, 64])?;
    let (r1, r2) = (errors[0] / errors[1], errors[1] / errors[2]);
    c.expect(
        r1 >= 2.0 && r2 >= 2.0,
        format!("max errors {:.3e}, {:.3e}, {:.3e}; ratios {r1:.2}, {r2:.2} (>= 2)", errors[0], errors[1], errors[2]),
    );
    c.expect(secs <= 120.0, format!("64^2 x 64-step solve {secs:.1} s (<= 120 s)"));

    // Oscillating in time: backward Euler is first order in dt.
    let moving = Arc::new(ancient(128, 512, 1e-10)?);
    let (errors, _) = refinement(moving, f2_expr, &[16, 32])?;
    let order = (errors[0] / errors[1]).log2();
    c.expect(
        (0.8..=1.5).contains(&order),
        format!("time-periodic f2: errors {:.3e}, {:.3e}; fitted order {order:.2} (about 1)", errors[0], errors[1]),
    );
    Ok(c)
}

fn homogenization() -> Result<Check> {
    let mut c = Check::new();
    let step = StepOptions::default();
    let base = HomogenizationBase {
        grid: BoxGrid::cube(2, 0.0, 1.0, 64)?,
        time: TimeGrid::new(-0.5, 32, None)?,
        oscillation: Arc::new(FnFunction::new(2, |y: &[f64], s: f64| {
            (1.0 + 0.3 * (2.0 * PI * y[0]).cos() * (2.0 * PI * y[1]).cos()) * (1.0 + 0.3 * (2.0 * PI * s).sin())
        })),
        g: Arc::new(FnFunction::new(2, |_: &[f64], _: f64| 0.0)),
        step: step.clone(),
    };
    let rows = sweep(&[0.5, 0.25, 0.125], &base)?;
    let mut runs = Vec::new();
    for row in &rows {
        match &row.run {
            Ok(r) => runs.push(r),
            Err(e) => {
                c.expect(false, format!("eps = {} failed: {e}", row.eps));
            }
        }
    }
    let gaps: Vec<f64> = runs.iter().map(|r| r.gap).collect();
    let monotone = gaps.len() == 3 && gaps.windows(2).all(|w| w[1] <= w[0] + 2.0 * step.tol);
    c.expect(monotone, format!("gaps {gaps:?} non-increasing within 2 x solver tol"));
    let beta = fit_rate(&runs).unwrap_or(f64::NAN);
    c.expect(beta > 0.0, format!("fitted log-log slope {beta:.3} (> 0)"));
    Ok(c)
}

fn level_sets() -> Result<Check> {
    let mut c = Check::new();
    let round = FnFunction::new(2, |x: &[f64], t: f64| -t + 0.5 * (x[0] * x[0] + x[1] * x[1]));
    let skew = FnFunction::new(2, |x: &[f64], _: f64| 2.0 * x[0] * x[0] + 0.5 * x[1] * x[1]);
    let window = BoxGrid::cube(2, -3.0, 3.0, 240)?;
    for (name, u, r_exact, ratio_exact) in
        [("|x|^2/2", &round as &dyn SpaceTimeFunction, 2.0, 0.5), ("x'diag(4,1)x/2", &skew, 2f64.sqrt(), 1.0)]
    {
        let rep = level_set_report(u, 2.0, &window)?;
        let (er, eq) = ((rep.r - r_exact).abs() / r_exact, (rep.ratio - ratio_exact).abs() / ratio_exact);
        c.expect(
            er <= 0.05 && eq <= 0.05,
            format!("{name}, H=2: R = {:.4} (exact {r_exact:.4}), H/R^2 = {:.4} (exact {ratio_exact})", rep.r, rep.ratio),
        );
        c.expect(
            rep.contains_inliers && rep.john_inner,
            format!("{name}: MVEE contains inliers {}, alpha_n-shrunken MVEE inside hull {}", rep.contains_inliers, rep.john_inner),
        );
    }
    let window = BoxGrid::cube(2, -2.0, 2.0, 160)?;
    let rep = level_set_report(&round, 1.0, &window)?;
    let ok = john_normalization_check(&round, &rep, &window, 1.0, 1.0)?;
    c.expect(
        ok.holds(),
        format!("paraboloid H=1, m1=m2=1: inner max u/H = {:.3}, outer violations {}+{}", ok.inner_max, ok.outer_space_violations, ok.outer_time_violations),
    );
    let halved = john_normalization_check(&round, &rep, &window, 1.0, 0.5)?;
    c.expect(
        !halved.inner_holds,
        format!("halved m2 control: inner max u/H = {:.3} (must reach 1 for the control to fail)", halved.inner_max),
    );
    let doubled = john_normalization_check(&round, &rep, &window, 2.0, 1.0)?;
    c.note(format!(
        "info: doubled m1 control fails as it should: {} time-slab violations",
        doubled.outer_time_violations
    ));
    Ok(c)
}

fn barriers() -> Result<Check> {
    let mut c = Check::new();
    let (lambda, big_lambda, f) = (0.5, 2.0, 1.0);
    let al = alpha(2);
    let (eps0, eps1, eps2) = (al / 2.0, al / (4.0 * big_lambda), 1.0 / lambda);
    let (l, depth) = (1.0, 0.5);
    let (r, h) = (0.97 * l / eps0, 0.97 * depth / eps1);
    let w1 = BarrierSpec::lower(2, lambda, eps0, eps1, h, r)?;
    let w2 = BarrierSpec::upper(2, big_lambda, eps2, h, r)?;

    let grid = BoxGrid::cube(2, -l, l, 32)?;
    let time = TimeGrid::new(-depth, 32, None)?;
    let mut problem = IbvpProblem::new(
        grid.clone(),
        time.clone(),
        Arc::new(FnFunction::new(2, move |_: &[f64], _: f64| f)),
        Arc::new(FnFunction::new(2, |_: &[f64], _: f64| 0.0)),
    );
    problem.step.tol = 1e-10;
    let sol = solve_ibvp(&problem)?;
    let slack = 10.0 * problem.step.tol;
    let (mut shared1, mut shared2, mut worst1, mut worst2) = (0, 0, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for step in 0..time.levels() {
        // barriers live in s = t - 0 with the top at t = 0
        let s = time.time(step);
        for node in 0..grid.len() {
            let x = &grid.coord(node)[..2];
            let u = sol.u.value(node, step);
            if let Ok(w) = barrier_eval(&w1, x, s) {
                shared1 += 1;
                worst1 = worst1.max(u - (w - h));
            }
            if let Ok(w) = barrier_eval(&w2, x, s) {
                shared2 += 1;
                worst2 = worst2.max((w - h) - u);
            }
        }
    }
    c.expect(shared2 == grid.len() * time.levels(), format!("upper-rate barrier domain covers all {shared2} samples"));
    c.expect(
        worst1 <= slack && worst2 <= slack && shared1 > 0,
        format!(
            "w2 - H <= u <= w1 - H: max violations {worst2:.2e} (lower side), {worst1:.2e} (upper side, {shared1} shared samples); slack {slack:.0e}"
        ),
    );
    Ok(c)
}

fn main() {
    let start = Instant::now();
    let sol = ancient(64, 256, 1e-8).expect("shared ancient solution");
    type Criterion<'a> = (&'static str, Box<dyn Fn() -> Result<Check> + 'a>);
    let criteria: Vec<Criterion> = vec![
        ("mean identity and fit round trip", Box::new(mean_identity)),
        ("cell solver", Box::new(cell_solver)),
        ("exact-solution residual", Box::new(exact_residual)),
        ("lattice second difference quotients", Box::new(|| lattice_quotients(&sol))),
        ("time difference quotients", Box::new(|| time_quotients(&sol))),
        ("quotient subsolution", Box::new(|| subsolution(&sol))),
        ("ibvp convergence", Box::new(ibvp_convergence)),
        ("homogenization", Box::new(homogenization)),
        ("level-set geometry", Box::new(level_sets)),
        ("barrier comparison", Box::new(barriers)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let check = run().unwrap_or_else(|e| {
            let mut c = Check::new();
            c.expect(false, format!("error: {e}"));
            c
        });
        let status = if check.pass { "PASS" } else { "FAIL" };
        println!("{status} {:>2} {name} ({:.1} s)", i + 1, t.elapsed().as_secs_f64());
        for line in &check.lines {
            println!("        {line}");
        }
        failed += usize::from(!check.pass);
    }
    println!("{} of {} criteria passed in {:.1} s", criteria.len() - failed, criteria.len(), start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
