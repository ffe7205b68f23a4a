//! Executes one command from a config and writes `summary.json`,
//! `<command>.csv` and optional dumps. Outputs are byte-identical for the
//! same config and seed unless timings are requested.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::cell::{build_ancient, mean_identity_check, solve_spatial_corrector, CellProblem};
use crate::config::{load_config, Command, ExperimentConfig, ExprFunction, Solution};
use crate::dump::{write_dump, DumpHeader};
use crate::error::{Error, Result};
use crate::fields::{Grid, PeriodicField, SpaceTimeField, TimeGrid};
use crate::function::SpaceTimeFunction;
use crate::ibvp::{fit_rate, solve_ibvp, sweep, HomogenizationBase, IbvpProblem, StepOptions};
use crate::liouville::{
    asymptotic_check, discrete_pde_residual, fit_decomposition, john_normalization_check, level_set_report,
    second_diff_quotient, time_diff_quotient, FitOptions, LatticeDirectionSet, Recentered,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub timings: bool,
    pub dump: bool,
}

/// What a command produced. `failure` marks a partial result that still gets
/// written before the run reports a solver error.
struct Artifacts {
    summary: Value,
    csv: String,
    dumps: Vec<(DumpHeader, Vec<f64>)>,
    files: Vec<(String, String)>,
    /// Error JSON of a partial failure.
    failure: Option<Value>,
}

impl Artifacts {
    fn new(summary: Value, csv: String) -> Self {
        Self { summary, csv, dumps: Vec::new(), files: Vec::new(), failure: None }
    }
}

struct Clock {
    start: Instant,
    enabled: bool,
}

impl Clock {
    fn new(enabled: bool) -> Self {
        Self { start: Instant::now(), enabled }
    }

    fn ms(&self) -> f64 {
        if self.enabled {
            self.start.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        }
    }
}

pub fn exit_code(err: &Error) -> i32 {
    if err.is_input_error() {
        EXIT_CONFIG
    } else {
        EXIT_SOLVER
    }
}

pub fn error_json(command: Command, err: &Error, code: i32) -> Value {
    let mut v = json!({
        "command": command.name(),
        "exit_code": code,
        "error": err.kind(),
        "message": err.to_string(),
        "diagnostics": format!("{err:?}"),
    });
    if let Error::Step { step, .. } = err {
        v["step"] = json!(step);
    }
    v
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values always serialize");
    s.push('\n');
    s
}

/// Loads the config at `path` and runs `command`; returns the exit code.
pub fn run_from_path(command: Command, path: &Path, opts: &RunOptions) -> i32 {
    match load_config(path) {
        Ok((cfg, base)) => run(command, &cfg, &base, opts),
        Err(err) => {
            let out = opts.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
            report_error(command, &out, &err, EXIT_CONFIG)
        }
    }
}

fn report_error(command: Command, out: &Path, err: &Error, code: i32) -> i32 {
    report_json(out, &error_json(command, err, code), code)
}

fn report_json(out: &Path, value: &Value, code: i32) -> i32 {
    let text = pretty(value);
    eprint!("{text}");
    if std::fs::create_dir_all(out).is_ok() {
        let _ = std::fs::write(out.join("error.json"), text);
    }
    code
}

pub fn run(command: Command, cfg: &ExperimentConfig, base: &Path, opts: &RunOptions) -> i32 {
    let out = opts
        .out_dir
        .clone()
        .or_else(|| cfg.output_dir.as_ref().map(|d| base.join(d)))
        .unwrap_or_else(|| PathBuf::from("out"));
    if let Some(c) = cfg.command {
        if c != command {
            let err = Error::Config(format!("config is for '{c}', not '{command}'"));
            return report_error(command, &out, &err, EXIT_CONFIG);
        }
    }
    let seed = opts.seed.or(cfg.seed).unwrap_or(0);
    let result = execute(command, cfg, base, seed, opts.timings);
    let artifacts = match result {
        Ok(a) => a,
        Err(err) => {
            let code = exit_code(&err);
            return report_error(command, &out, &err, code);
        }
    };
    if let Err(err) = write_artifacts(command, &out, &artifacts, opts.dump || cfg.dump.unwrap_or(false)) {
        return report_error(command, &out, &err, EXIT_SOLVER);
    }
    match &artifacts.failure {
        Some(value) => report_json(&out, value, EXIT_SOLVER),
        None => {
            let _ = std::fs::remove_file(out.join("error.json"));
            EXIT_OK
        }
    }
}

fn write_artifacts(command: Command, out: &Path, a: &Artifacts, dump: bool) -> Result<()> {
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("summary.json"), pretty(&a.summary))?;
    std::fs::write(out.join(format!("{}.csv", command.name())), &a.csv)?;
    for (name, text) in &a.files {
        std::fs::write(out.join(name), text)?;
    }
    if dump {
        for (header, values) in &a.dumps {
            write_dump(&out.join(format!("{}.bin", header.name)), header, values)?;
        }
    }
    Ok(())
}

fn execute(command: Command, cfg: &ExperimentConfig, base: &Path, seed: u64, timings: bool) -> Result<Artifacts> {
    let clock = Clock::new(timings);
    let mut a = match command {
        Command::CellSolve => cell_solve(cfg, base)?,
        Command::BuildAncient => ancient(cfg, base)?,
        Command::IbvpSolve => ibvp(cfg)?,
        Command::HomogenizeSweep => homogenize(cfg, timings)?,
        Command::FitDecomposition => fit(cfg, base, seed)?,
        Command::LevelSet => level_set(cfg, base)?,
    };
    a.summary["command"] = json!(command.name());
    a.summary["seed"] = json!(seed);
    a.summary["wall_ms"] = json!(clock.ms());
    Ok(a)
}

fn torus_dump(name: &str, field: &PeriodicField) -> (DumpHeader, Vec<f64>) {
    let g = field.grid();
    let n = g.dim();
    let header = DumpHeader::new(name, g.shape().to_vec(), (0..n).map(|a| g.spacing(a)).collect(), vec![0.0; n]);
    (header, field.values().to_vec())
}

fn space_time_dump(name: &str, field: &SpaceTimeField) -> (DumpHeader, Vec<f64>) {
    let g = field.grid();
    let n = g.dim();
    let t = field.time();
    let origin = g.coord(0);
    let mut shape = vec![t.levels()];
    shape.extend_from_slice(g.shape());
    let mut spacing = vec![t.dt()];
    spacing.extend((0..n).map(|a| g.spacing(a)));
    let mut orig = vec![t.t0()];
    orig.extend_from_slice(&origin[..n]);
    (DumpHeader::new(name, shape, spacing, orig), field.values().to_vec())
}

fn history_csv(history: &[f64]) -> String {
    let mut csv = String::from("iteration,stationarity_l2\n");
    for (i, r) in history.iter().enumerate() {
        let _ = writeln!(csv, "{i},{r:e}");
    }
    csv
}

fn cell_problem(cfg: &ExperimentConfig, base: &Path) -> Result<CellProblem> {
    let mut p = CellProblem::new(cfg.matrix()?, cfg.f1_field(base)?, cfg.tol()?)?;
    if let Some(s) = cfg.stationarity_tol {
        p.stationarity_tol = s;
    }
    Ok(p)
}

fn cell_solve(cfg: &ExperimentConfig, base: &Path) -> Result<Artifacts> {
    let problem = cell_problem(cfg, base)?;
    let sol = solve_spatial_corrector(&problem)?;
    let summary = json!({
        "dimension": problem.f1.grid().dim(),
        "resolution": problem.f1.grid().shape(),
        "periods": problem.f1.grid().periods(),
        "newton_iterations": sol.newton_iterations,
        "linear_iterations": sol.linear_iterations,
        "residual": sol.residual,
        "compatibility": sol.compatibility,
        "mean_f1": problem.f1.mean(),
        "xi_min": sol.xi.min(),
        "xi_max": sol.xi.max(),
    });
    let mut a = Artifacts::new(summary, history_csv(&sol.history));
    a.dumps.push(torus_dump("xi", &sol.xi));
    Ok(a)
}

/// `f1(x) f2(t)` with `f1` interpolated from its torus samples.
struct ProductSource {
    f1: PeriodicField,
    f2: ExprFunction,
}

impl SpaceTimeFunction for ProductSource {
    fn dim(&self) -> usize {
        self.f1.grid().dim()
    }

    fn value(&self, x: &[f64], t: f64) -> f64 {
        self.f1.interpolate(x) * self.f2.value(&[], t)
    }
}

fn product_source(cfg: &ExperimentConfig, base: &Path) -> Result<ProductSource> {
    let f1 = cfg.f1_field(base)?;
    let mut f2 = cfg.expression("f2", cfg.f2.as_deref().unwrap_or("1"), 0, true)?;
    f2.dim = 0;
    Ok(ProductSource { f1, f2 })
}

fn ancient(cfg: &ExperimentConfig, base: &Path) -> Result<Artifacts> {
    let a = cfg.matrix()?;
    let b = cfg.vector_b()?;
    let gamma = cfg.gamma.unwrap_or(0.0);
    let a0 = cfg.time_period()?;
    let f1 = cfg.f1_field(base)?;
    let f2 = cfg.f2_samples()?;
    let (sol, cell) = build_ancient(&a, &b, gamma, &f1, &f2, a0, cfg.tol()?)?;
    let defect = mean_identity_check(&sol, &f1, &f2);
    let mean_f = f1.mean() * f2.iter().sum::<f64>() / f2.len() as f64;
    let source = product_source(cfg, base)?;
    let time = TimeGrid::new(-a0, f2.len(), Some(a0))?;
    let pde = discrete_pde_residual(&sol, &source, f1.grid(), &time);
    let summary = json!({
        "dimension": a.n(),
        "tau": sol.tau,
        "det_a": sol.a.det(),
        "mean_f": mean_f,
        "mean_identity_defect": defect,
        "cell_residual": cell.residual,
        "newton_iterations": cell.newton_iterations,
        "pde_residual": pde,
        "m1": sol.m1(),
        "m2": sol.m2(),
        "a": sol.a.rows(),
        "b": sol.b,
        "gamma": sol.gamma,
    });
    let mut out = Artifacts::new(summary, history_csv(&cell.history));
    out.dumps.push(torus_dump("xi1", &sol.xi1));
    let xi2 = sol.xi2.samples();
    out.dumps.push((
        DumpHeader::new("xi2", vec![xi2.len()], vec![a0 / (xi2.len() - 1) as f64], vec![-a0]),
        xi2.to_vec(),
    ));
    out.files.push(("ancient.json".into(), serde_json::to_string(&sol)? + "\n"));
    Ok(out)
}

fn step_options(cfg: &ExperimentConfig) -> Result<StepOptions> {
    let mut step = StepOptions::default();
    if let Some(t) = cfg.newton_tol {
        if !(t > 0.0) {
            return Err(Error::Config("'newton_tol' must be positive".into()));
        }
        step.tol = t;
    }
    Ok(step)
}

fn ibvp(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let mut problem = IbvpProblem::new(cfg.box_grid()?, cfg.time_grid()?, cfg.source_f()?, cfg.boundary_g()?);
    problem.step = step_options(cfg)?;
    let exact = cfg.exact()?;
    let sol = solve_ibvp(&problem)?;
    let grid = &problem.grid;
    let n = grid.dim();
    let mut csv = String::from("step,t,u_min,u_max");
    csv.push_str(if exact.is_some() { ",max_error\n" } else { "\n" });
    let mut max_error = 0.0f64;
    for step in 0..problem.time.levels() {
        let t = problem.time.time(step);
        let slice = sol.u.slice(step);
        let lo = slice.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = slice.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let _ = write!(csv, "{step},{t},{lo},{hi}");
        if let Some(e) = &exact {
            let err = (0..grid.len())
                .map(|node| (slice[node] - e.value(&grid.coord(node)[..n], t)).abs())
                .fold(0.0, f64::max);
            max_error = max_error.max(err);
            let _ = write!(csv, ",{err:e}");
        }
        csv.push('\n');
    }
    let mut summary = json!({
        "dimension": n,
        "steps": problem.time.steps(),
        "dt": problem.time.dt(),
        "residual": sol.residual,
        "newton_iterations": sol.newton_iterations,
        "convexity": sol.convexity,
        "convex": sol.convexity.convex(),
        "nonincreasing": sol.convexity.nonincreasing(),
    });
    if exact.is_some() {
        summary["max_error"] = json!(max_error);
    }
    let mut a = Artifacts::new(summary, csv);
    a.dumps.push(space_time_dump("u", &sol.u));
    Ok(a)
}

fn homogenize(cfg: &ExperimentConfig, timings: bool) -> Result<Artifacts> {
    let base = HomogenizationBase {
        grid: cfg.box_grid()?,
        time: cfg.time_grid()?,
        oscillation: cfg.oscillation()?,
        g: cfg.boundary_g()?,
        step: step_options(cfg)?,
    };
    let eps = cfg.eps_list()?;
    let rows = sweep(&eps, &base)?;
    let mut csv = String::from("eps,cell_measure,gap,newton_iterations,neg_ut_min,neg_ut_max,wall_ms,status\n");
    let mut table = Vec::new();
    let mut failure = None;
    for row in &rows {
        match &row.run {
            Ok(r) => {
                let wall = if timings { r.wall_ms } else { 0.0 };
                let _ = writeln!(
                    csv,
                    "{},{},{:e},{},{},{},{},ok",
                    r.eps, r.cell_measure, r.gap, r.newton_iterations, r.neg_ut_min, r.neg_ut_max, wall
                );
                table.push(json!({
                    "eps": r.eps, "cell_measure": r.cell_measure, "gap": r.gap,
                    "newton_iterations": r.newton_iterations, "status": "ok",
                }));
            }
            Err(e) => {
                let _ = writeln!(csv, "{},,,,,,,{}", row.eps, e.kind());
                table.push(json!({"eps": row.eps, "status": e.kind(), "message": e.to_string()}));
                if failure.is_none() {
                    let mut v = error_json(Command::HomogenizeSweep, e, EXIT_SOLVER);
                    v["eps"] = json!(row.eps);
                    failure = Some(v);
                }
            }
        }
    }
    let ok: Vec<_> = rows.iter().filter_map(|r| r.run.as_ref().ok()).collect();
    let gaps: Vec<f64> = ok.iter().map(|r| r.gap).collect();
    let summary = json!({
        "dimension": base.grid.dim(),
        "rows": table,
        "beta_hat": fit_rate(&ok),
        "gap_nonincreasing": gaps.windows(2).all(|w| w[1] <= w[0] + 2.0 * base.step.tol),
    });
    let mut a = Artifacts::new(summary, csv);
    a.failure = failure;
    Ok(a)
}

fn fit(cfg: &ExperimentConfig, base: &Path, seed: u64) -> Result<Artifacts> {
    let solution = cfg.solution(base)?;
    let u = solution.as_function();
    let n = u.dim();
    let (periods, a0) = match &solution {
        Solution::Ancient(s) => (s.periods().to_vec(), s.time_period()),
        Solution::Closed(_) => (cfg.periods()?, cfg.time_period()?),
    };
    let source: Option<Box<dyn SpaceTimeFunction>> = match (&cfg.f, &cfg.f1, &cfg.f1_csv) {
        (Some(text), _, _) => Some(Box::new(cfg.expression("f", text, n, true)?)),
        (None, Some(_), _) | (None, _, Some(_)) => Some(Box::new(product_source(cfg, base)?)),
        _ => None,
    };
    let opts = FitOptions { nodes: cfg.fit_nodes.unwrap_or(32), time_steps: cfg.fit_time_steps.unwrap_or(32) };
    let fit = fit_decomposition(u, &periods, a0, source.as_deref(), &opts)?;

    let radii = cfg.radii.clone().unwrap_or_else(|| vec![10.0, 20.0, 40.0]);
    let asym = asymptotic_check(u, &fit, &radii, cfg.asymptotic_eps.unwrap_or(0.5))?;

    // Seeded quotient checks against the fitted constants.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = cfg.quotient_samples.unwrap_or(1000);
    let lattice = LatticeDirectionSet::standard(&periods).vectors();
    let (mut lattice_defect, mut time_defect, mut min_quotient) = (0.0f64, 0.0f64, f64::INFINITY);
    for _ in 0..samples {
        let x: Vec<f64> = periods.iter().map(|&p| rng.random_range(-2.0 * p..2.0 * p)).collect();
        let t = rng.random_range(-2.0 * a0..0.0);
        for e in &lattice {
            let exact = fit.a.quad_form(e) / e.iter().map(|v| v * v).sum::<f64>();
            lattice_defect = lattice_defect.max((second_diff_quotient(u, e, &x, t)? - exact).abs());
        }
        time_defect = time_defect.max((time_diff_quotient(u, a0, &x, t)? + fit.tau).abs());
        let e: Vec<f64> = loop {
            let e: Vec<f64> = periods.iter().map(|&p| rng.random_range(-p..p)).collect();
            if e.iter().map(|v| v * v).sum::<f64>() >= 0.0025 {
                break e;
            }
        };
        min_quotient = min_quotient.min(second_diff_quotient(u, &e, &x, t)?);
    }

    let mut summary = json!({
        "dimension": n,
        "periods": periods,
        "time_period": a0,
        "tau": fit.tau,
        "a": fit.a.rows(),
        "det_a": fit.a.det(),
        "b": fit.b,
        "gamma": fit.gamma,
        "residuals": fit.residuals,
        "asymptotic": asym,
        "quotient_samples": samples,
        "lattice_quotient_defect": lattice_defect,
        "time_quotient_defect": time_defect,
        "min_quotient": min_quotient,
    });
    if cfg.a.is_some() || cfg.b.is_some() || cfg.gamma.is_some() {
        let a = cfg.matrix()?;
        let b = cfg.vector_b()?;
        let mut err = (fit.gamma - cfg.gamma.unwrap_or(0.0)).abs();
        for i in 0..n {
            err = err.max((fit.b[i] - b[i]).abs());
            for j in 0..n {
                err = err.max((fit.a.get(i, j) - a.get(i, j)).abs());
            }
        }
        summary["max_parameter_error"] = json!(err);
    }
    let mut csv = String::from("radius,ratio\n");
    for (r, q) in asym.radii.iter().zip(&asym.ratios) {
        let _ = writeln!(csv, "{r},{q:e}");
    }
    let mut a = Artifacts::new(summary, csv);
    a.dumps.push(space_time_dump("v", &fit.v));
    Ok(a)
}

fn level_set(cfg: &ExperimentConfig, base: &Path) -> Result<Artifacts> {
    let solution = cfg.solution(base)?;
    let window = cfg.window()?;
    let raw = solution.as_function();
    if raw.dim() != window.dim() {
        return Err(Error::Config("'window' dimension differs from the solution".into()));
    }
    let (m1, m2) = match (&solution, cfg.m1, cfg.m2) {
        (_, Some(m1), Some(m2)) => (Some(m1), Some(m2)),
        (Solution::Ancient(s), None, None) => (Some(s.m1()), Some(s.m2())),
        (_, None, None) => (None, None),
        _ => return Err(Error::Config("give both 'm1' and 'm2' or neither".into())),
    };
    let recentered;
    let u: &dyn SpaceTimeFunction = if cfg.recenter.unwrap_or(true) {
        recentered = Recentered::new(raw, &window)?;
        &recentered
    } else {
        raw
    };
    let n = window.dim();
    let mut csv = String::from("h,inliers,boundary_inliers,r,ratio,contains_inliers,john_inner");
    if m1.is_some() {
        csv.push_str(",eps0,eps1,eps2,inner_max,outer_space_violations,outer_time_violations,normalization_holds");
    }
    csv.push('\n');
    let mut rows = Vec::new();
    for h in cfg.levels()? {
        let rep = level_set_report(u, h, &window)?;
        let _ = write!(
            csv,
            "{},{},{},{},{},{},{}",
            h,
            rep.inliers.len(),
            rep.boundary_inliers,
            rep.r,
            rep.ratio,
            rep.contains_inliers,
            rep.john_inner
        );
        let mut row = json!({
            "h": h,
            "inliers": rep.inliers.len(),
            "boundary_inliers": rep.boundary_inliers,
            "center": rep.ellipsoid.center,
            "shape": rep.ellipsoid.shape.rows(),
            "r": rep.r,
            "ratio": rep.ratio,
            "normalizer": rep.normalizer.rows(),
            "alpha": rep.alpha,
            "contains_inliers": rep.contains_inliers,
            "john_inner": rep.john_inner,
        });
        if let (Some(m1), Some(m2)) = (m1, m2) {
            let j = john_normalization_check(u, &rep, &window, m1, m2)?;
            let _ = write!(
                csv,
                ",{},{},{},{},{},{},{}",
                j.eps0,
                j.eps1,
                j.eps2,
                j.inner_max,
                j.outer_space_violations,
                j.outer_time_violations,
                j.holds()
            );
            row["normalization"] = json!(j);
            row["normalization_holds"] = json!(j.holds());
        }
        csv.push('\n');
        rows.push(row);
    }
    let ratios: Vec<f64> = rows.iter().map(|r| r["ratio"].as_f64().unwrap_or(f64::NAN)).collect();
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let summary = json!({
        "dimension": n,
        "m1": m1,
        "m2": m2,
        "levels": rows,
        "ratio_min": lo,
        "ratio_max": hi,
        "ratio_spread": hi / lo,
    });
    Ok(Artifacts::new(summary, csv))
}

#[cfg(test)]
mod scenarios;
