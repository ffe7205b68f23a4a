//! JSON experiment configuration and its validation.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cell::{sample_period, AncientSolution};
use crate::error::{Error, Result};
use crate::expr::{parse_expression, Expr};
use crate::fields::{BoxGrid, BoxGridSpec, Grid, PeriodicField, SampleOptions, TimeGrid, TorusGrid};
use crate::function::SpaceTimeFunction;
use crate::ibvp::SharedFunction;
use crate::linalg::SpdMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    CellSolve,
    BuildAncient,
    IbvpSolve,
    HomogenizeSweep,
    FitDecomposition,
    LevelSet,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::CellSolve,
        Command::BuildAncient,
        Command::IbvpSolve,
        Command::HomogenizeSweep,
        Command::FitDecomposition,
        Command::LevelSet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::CellSolve => "cell-solve",
            Command::BuildAncient => "build-ancient",
            Command::IbvpSolve => "ibvp-solve",
            Command::HomogenizeSweep => "homogenize-sweep",
            Command::FitDecomposition => "fit-decomposition",
            Command::LevelSet => "level-set",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown command '{s}'")))
    }
}

/// Every field is optional in JSON; each command reads what it needs and
/// complains about what is missing.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Option<Command>,
    pub dimension: Option<usize>,
    pub periods: Option<Vec<f64>>,
    pub time_period: Option<f64>,
    /// Torus nodes per axis for the cell problem.
    pub resolution: Option<usize>,
    /// Samples of `f2` per temporal period.
    pub time_samples: Option<usize>,
    pub tol: Option<f64>,
    pub stationarity_tol: Option<f64>,
    /// Rescale `f1` and `f2` samples to unit mean.
    pub normalize: Option<bool>,
    pub a: Option<Vec<Vec<f64>>>,
    pub b: Option<Vec<f64>>,
    pub gamma: Option<f64>,
    pub f1: Option<String>,
    /// Whitespace or comma separated samples of `f1` on the torus nodes, row-major.
    pub f1_csv: Option<PathBuf>,
    pub f2: Option<String>,
    #[serde(rename = "box")]
    pub box_grid: Option<BoxGridSpec>,
    pub t0: Option<f64>,
    pub steps: Option<usize>,
    pub f: Option<String>,
    pub g: Option<String>,
    /// Closed-form solution for error reporting in `ibvp-solve`.
    pub exact: Option<String>,
    pub newton_tol: Option<f64>,
    pub eps: Option<Vec<f64>>,
    /// Unit-periodic `osc(y, s)`; the sweep uses `osc(x / eps, t / eps)`.
    pub oscillation: Option<String>,
    /// Path to an `ancient.json` written by `build-ancient`.
    pub ancient: Option<PathBuf>,
    /// Closed-form `u(x, t)`; alternative to `ancient`.
    pub u: Option<String>,
    pub levels: Option<Vec<f64>>,
    pub window: Option<BoxGridSpec>,
    pub recenter: Option<bool>,
    pub m1: Option<f64>,
    pub m2: Option<f64>,
    pub radii: Option<Vec<f64>>,
    pub asymptotic_eps: Option<f64>,
    pub fit_nodes: Option<usize>,
    pub fit_time_steps: Option<usize>,
    pub quotient_samples: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub dump: Option<bool>,
}

/// Parsed expression usable as a space-time function of fixed dimension.
#[derive(Clone, Debug)]
pub struct ExprFunction {
    pub expr: Expr,
    pub dim: usize,
}

impl SpaceTimeFunction for ExprFunction {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64], t: f64) -> f64 {
        self.expr.eval(x, t)
    }
}

fn missing(field: &str) -> Error {
    Error::Config(format!("missing field '{field}'"))
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Config(format!("'{name}' must be positive and finite")))
    }
}

/// Reads a config file; relative paths inside it resolve against its directory.
pub fn load_config(path: &Path) -> Result<(ExperimentConfig, PathBuf)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let cfg = parse_config(&text)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

impl ExperimentConfig {
    pub fn dim(&self) -> Result<usize> {
        let n = self.dimension.ok_or_else(|| missing("dimension"))?;
        if (1..=3).contains(&n) {
            Ok(n)
        } else {
            Err(Error::Config(format!("dimension {n} not in 1..=3")))
        }
    }

    pub fn periods(&self) -> Result<Vec<f64>> {
        let n = self.dim()?;
        match &self.periods {
            None => Ok(vec![1.0; n]),
            Some(p) if p.len() == n => {
                p.iter().try_for_each(|&v| positive("periods", v).map(|_| ()))?;
                Ok(p.clone())
            }
            Some(p) => Err(Error::Config(format!("{} periods for dimension {n}", p.len()))),
        }
    }

    pub fn time_period(&self) -> Result<f64> {
        positive("time_period", self.time_period.unwrap_or(1.0))
    }

    pub fn tol(&self) -> Result<f64> {
        positive("tol", self.tol.unwrap_or(1e-8))
    }

    pub fn matrix(&self) -> Result<SpdMatrix> {
        let n = self.dim()?;
        match &self.a {
            None => Ok(SpdMatrix::identity(n)),
            Some(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(Error::Config(format!("'a' must be {n}x{n}")));
                }
                SpdMatrix::from_rows(rows).map_err(|e| Error::Config(format!("'a': {e}")))
            }
        }
    }

    pub fn vector_b(&self) -> Result<Vec<f64>> {
        let n = self.dim()?;
        match &self.b {
            None => Ok(vec![0.0; n]),
            Some(b) if b.len() == n => Ok(b.clone()),
            Some(b) => Err(Error::Config(format!("'b' has {} entries, expected {n}", b.len()))),
        }
    }

    /// Parses `text` and checks it only uses `x1..x{dim}` and, if allowed, `t`.
    pub fn expression(&self, field: &str, text: &str, dim: usize, time: bool) -> Result<ExprFunction> {
        let expr = parse_expression(text).map_err(|e| Error::Config(format!("'{field}': {e}")))?;
        if expr.spatial_arity() > dim {
            return Err(Error::Config(format!("'{field}' uses x{} in dimension {dim}", expr.spatial_arity())));
        }
        if !time && expr.uses_time() {
            return Err(Error::Config(format!("'{field}' may not depend on t")));
        }
        Ok(ExprFunction { expr, dim })
    }

    fn shared(&self, field: &str, text: Option<&String>, dim: usize) -> Result<SharedFunction> {
        let text = text.ok_or_else(|| missing(field))?;
        Ok(Arc::new(self.expression(field, text, dim, true)?))
    }

    pub fn torus(&self) -> Result<TorusGrid> {
        let n = self.dim()?;
        TorusGrid::new(&self.periods()?, &vec![self.resolution.unwrap_or(64); n])
            .map_err(|e| Error::Config(format!("resolution: {e}")))
    }

    fn sample_options(&self) -> SampleOptions {
        SampleOptions { require_positive: true, normalize: self.normalize.unwrap_or(false) }
    }

    /// `f1` on the cell torus, from `f1` or `f1_csv` (exactly one).
    pub fn f1_field(&self, base: &Path) -> Result<PeriodicField> {
        let grid = self.torus()?;
        let n = grid.dim();
        match (&self.f1, &self.f1_csv) {
            (Some(_), Some(_)) => Err(Error::Config("give either 'f1' or 'f1_csv', not both".into())),
            (None, None) => Err(missing("f1")),
            (Some(text), None) => {
                let f = self.expression("f1", text, n, false)?;
                PeriodicField::sample(&grid, |x| f.value(x, 0.0), self.sample_options())
            }
            (None, Some(path)) => {
                let path = base.join(path);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                let values = parse_csv_values(&text)?;
                if values.len() != grid.len() {
                    return Err(Error::Config(format!(
                        "f1_csv has {} values, torus has {} nodes",
                        values.len(),
                        grid.len()
                    )));
                }
                let field = PeriodicField::new(grid.clone(), values)?;
                PeriodicField::sample(&grid, |x| field.interpolate(x), self.sample_options())
            }
        }
    }

    /// Samples of `f2` over one period (default `f2 = 1`).
    pub fn f2_samples(&self) -> Result<Vec<f64>> {
        let a0 = self.time_period()?;
        let m = self.time_samples.unwrap_or(64);
        let f = self.expression("f2", self.f2.as_deref().unwrap_or("1"), 0, true)?;
        let mut s = sample_period(|t| f.value(&[], t), a0, m);
        if let Some(i) = s.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Positivity { index: i, value: s[i] });
        }
        if self.normalize.unwrap_or(false) {
            let mean = s.iter().sum::<f64>() / s.len() as f64;
            s.iter_mut().for_each(|v| *v /= mean);
        }
        Ok(s)
    }

    pub fn box_grid(&self) -> Result<BoxGrid> {
        let spec = self.box_grid.clone().ok_or_else(|| missing("box"))?;
        let grid = BoxGrid::try_from(spec).map_err(|e| Error::Config(format!("'box': {e}")))?;
        if grid.dim() != self.dim()? {
            return Err(Error::Config("'box' dimension differs from 'dimension'".into()));
        }
        Ok(grid)
    }

    pub fn window(&self) -> Result<BoxGrid> {
        let spec = self.window.clone().ok_or_else(|| missing("window"))?;
        let grid = BoxGrid::try_from(spec).map_err(|e| Error::Config(format!("'window': {e}")))?;
        if grid.dim() != self.dim()? {
            return Err(Error::Config("'window' dimension differs from 'dimension'".into()));
        }
        Ok(grid)
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        let t0 = self.t0.ok_or_else(|| missing("t0"))?;
        let steps = self.steps.ok_or_else(|| missing("steps"))?;
        TimeGrid::new(t0, steps, None).map_err(|e| Error::Config(format!("time grid: {e}")))
    }

    pub fn source_f(&self) -> Result<SharedFunction> {
        self.shared("f", self.f.as_ref(), self.dim()?)
    }

    pub fn boundary_g(&self) -> Result<SharedFunction> {
        let n = self.dim()?;
        Ok(match &self.g {
            Some(text) => Arc::new(self.expression("g", text, n, true)?),
            None => Arc::new(ExprFunction { expr: Expr::Num(0.0), dim: n }),
        })
    }

    pub fn oscillation(&self) -> Result<SharedFunction> {
        self.shared("oscillation", self.oscillation.as_ref(), self.dim()?)
    }

    pub fn exact(&self) -> Result<Option<ExprFunction>> {
        let n = self.dim()?;
        self.exact.as_ref().map(|text| self.expression("exact", text, n, true)).transpose()
    }

    pub fn eps_list(&self) -> Result<Vec<f64>> {
        let eps = self.eps.clone().ok_or_else(|| missing("eps"))?;
        if eps.is_empty() {
            return Err(Error::Config("'eps' is empty".into()));
        }
        for &e in &eps {
            positive("eps", e)?;
        }
        Ok(eps)
    }

    pub fn levels(&self) -> Result<Vec<f64>> {
        let levels = self.levels.clone().ok_or_else(|| missing("levels"))?;
        if levels.is_empty() {
            return Err(Error::Config("'levels' is empty".into()));
        }
        for &h in &levels {
            positive("levels", h)?;
        }
        Ok(levels)
    }

    /// The solution to analyse: an `ancient.json` file or a closed form `u`.
    pub fn solution(&self, base: &Path) -> Result<Solution> {
        match (&self.ancient, &self.u) {
            (Some(_), Some(_)) => Err(Error::Config("give either 'ancient' or 'u', not both".into())),
            (None, None) => Err(missing("ancient")),
            (Some(path), None) => {
                let path = base.join(path);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                let sol: AncientSolution = serde_json::from_str(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                if let Some(n) = self.dimension {
                    if n != sol.dim() {
                        return Err(Error::Config("'dimension' differs from the ancient solution".into()));
                    }
                }
                Ok(Solution::Ancient(Box::new(sol)))
            }
            (None, Some(text)) => Ok(Solution::Closed(self.expression("u", text, self.dim()?, true)?)),
        }
    }
}

pub enum Solution {
    Ancient(Box<AncientSolution>),
    Closed(ExprFunction),
}

impl Solution {
    pub fn as_function(&self) -> &dyn SpaceTimeFunction {
        match self {
            Solution::Ancient(a) => a.as_ref(),
            Solution::Closed(f) => f,
        }
    }
}

pub fn parse_csv_values(text: &str) -> Result<Vec<f64>> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| Error::Config(format!("bad number '{s}' in csv"))))
        .collect()
}
