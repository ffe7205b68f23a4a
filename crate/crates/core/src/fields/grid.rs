use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::MAX_DIM;

/// A point in space, padded to `MAX_DIM`; only the first `dim` entries matter.
pub type Point = [f64; MAX_DIM];

/// Minimum number of nodes (torus) or cells (box) per axis.
pub const MIN_RESOLUTION: usize = 8;

/// Uniform spatial grid with stencil-neighbour lookup.
pub trait Grid {
    fn dim(&self) -> usize;
    /// Number of nodes per axis.
    fn shape(&self) -> &[usize];
    fn spacing(&self, axis: usize) -> f64;
    fn coord(&self, node: usize) -> Point;
    /// Node `offset` steps away along `axis`, or `None` outside a bounded grid.
    fn neighbor(&self, node: usize, axis: usize, offset: isize) -> Option<usize>;

    fn len(&self) -> usize {
        self.shape().iter().product()
    }

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn multi_index(&self, node: usize) -> [usize; MAX_DIM] {
        let shape = self.shape();
        let mut idx = [0; MAX_DIM];
        let mut rem = node;
        for axis in (0..self.dim()).rev() {
            idx[axis] = rem % shape[axis];
            rem /= shape[axis];
        }
        idx
    }

    fn flat_index(&self, idx: &[usize]) -> usize {
        let shape = self.shape();
        (0..self.dim()).fold(0, |acc, axis| acc * shape[axis] + idx[axis])
    }

    fn stride(&self, axis: usize) -> usize {
        self.shape()[axis + 1..self.dim()].iter().product()
    }
}

fn check_dim(n: usize) -> Result<()> {
    if (1..=MAX_DIM).contains(&n) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("spatial dimension {n} not in 1..=3")))
    }
}

/// Periodic grid on `prod [0, a_i)` with `N_i` nodes per axis; node `k`
/// sits at `k * a_i / N_i` and indices wrap modulo `N_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusGrid {
    periods: Vec<f64>,
    resolution: Vec<usize>,
}

impl TorusGrid {
    pub fn new(periods: &[f64], resolution: &[usize]) -> Result<Self> {
        check_dim(periods.len())?;
        if periods.len() != resolution.len() {
            return Err(Error::InvalidArgument("periods and resolution differ in length".into()));
        }
        if periods.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
            return Err(Error::InvalidArgument("periods must be positive".into()));
        }
        if resolution.iter().any(|&n| n < MIN_RESOLUTION) {
            return Err(Error::InvalidArgument(format!(
                "torus resolution must be at least {MIN_RESOLUTION} per axis"
            )));
        }
        Ok(Self { periods: periods.to_vec(), resolution: resolution.to_vec() })
    }

    /// Unit torus `[0,1)^n` with `points` nodes per axis.
    pub fn unit(n: usize, points: usize) -> Result<Self> {
        Self::new(&vec![1.0; n], &vec![points; n])
    }

    pub fn periods(&self) -> &[f64] {
        &self.periods
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    /// Volume of one period cell.
    pub fn cell_volume(&self) -> f64 {
        self.periods.iter().product()
    }

    /// Wrapped neighbour along an axis.
    #[inline]
    pub fn wrap(&self, node: usize, axis: usize, offset: isize) -> usize {
        let n = self.resolution[axis] as isize;
        let stride = self.stride(axis);
        let k = ((node / stride) % n as usize) as isize;
        let k_new = (k + offset).rem_euclid(n);
        (node as isize + (k_new - k) * stride as isize) as usize
    }
}

impl Grid for TorusGrid {
    fn dim(&self) -> usize {
        self.periods.len()
    }

    fn shape(&self) -> &[usize] {
        &self.resolution
    }

    fn spacing(&self, axis: usize) -> f64 {
        self.periods[axis] / self.resolution[axis] as f64
    }

    fn coord(&self, node: usize) -> Point {
        let idx = self.multi_index(node);
        let mut p = [0.0; MAX_DIM];
        for axis in 0..self.dim() {
            p[axis] = idx[axis] as f64 * self.spacing(axis);
        }
        p
    }

    fn neighbor(&self, node: usize, axis: usize, offset: isize) -> Option<usize> {
        Some(self.wrap(node, axis, offset))
    }
}

/// Bounded box `prod [lower_i, upper_i]` split into `N_i` cells per axis,
/// so it carries `N_i + 1` nodes per axis including both faces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BoxGridSpec", into = "BoxGridSpec")]
pub struct BoxGrid {
    lower: Vec<f64>,
    upper: Vec<f64>,
    cells: Vec<usize>,
    nodes: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxGridSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub resolution: Vec<usize>,
}

impl TryFrom<BoxGridSpec> for BoxGrid {
    type Error = Error;

    fn try_from(s: BoxGridSpec) -> Result<Self> {
        BoxGrid::new(&s.lower, &s.upper, &s.resolution)
    }
}

impl From<BoxGrid> for BoxGridSpec {
    fn from(g: BoxGrid) -> Self {
        BoxGridSpec { lower: g.lower, upper: g.upper, resolution: g.cells }
    }
}

impl BoxGrid {
    pub fn new(lower: &[f64], upper: &[f64], cells: &[usize]) -> Result<Self> {
        check_dim(lower.len())?;
        if lower.len() != upper.len() || lower.len() != cells.len() {
            return Err(Error::InvalidArgument("box corners and resolution differ in length".into()));
        }
        if lower.iter().zip(upper).any(|(l, u)| !(u > l) || !l.is_finite() || !u.is_finite()) {
            return Err(Error::InvalidArgument("box upper corner must exceed lower corner".into()));
        }
        if cells.iter().any(|&n| n < MIN_RESOLUTION) {
            return Err(Error::InvalidArgument(format!(
                "box resolution must be at least {MIN_RESOLUTION} cells per axis"
            )));
        }
        Ok(Self {
            lower: lower.to_vec(),
            upper: upper.to_vec(),
            cells: cells.to_vec(),
            nodes: cells.iter().map(|n| n + 1).collect(),
        })
    }

    /// Cube `[lo, hi]^n` with `cells` cells per axis.
    pub fn cube(n: usize, lo: f64, hi: f64, cells: usize) -> Result<Self> {
        Self::new(&vec![lo; n], &vec![hi; n], &vec![cells; n])
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        let idx = self.multi_index(node);
        (0..self.dim()).any(|a| idx[a] == 0 || idx[a] == self.cells[a])
    }

    /// Nodes at least `margin` steps away from every face.
    pub fn inner_nodes(&self, margin: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&node| {
                let idx = self.multi_index(node);
                (0..self.dim()).all(|a| idx[a] >= margin && idx[a] + margin <= self.cells[a])
            })
            .collect()
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        self.inner_nodes(1)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        (0..self.dim()).all(|a| x[a] >= self.lower[a] && x[a] <= self.upper[a])
    }
}

impl Grid for BoxGrid {
    fn dim(&self) -> usize {
        self.lower.len()
    }

    fn shape(&self) -> &[usize] {
        &self.nodes
    }

    fn spacing(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / self.cells[axis] as f64
    }

    fn coord(&self, node: usize) -> Point {
        let idx = self.multi_index(node);
        let mut p = [0.0; MAX_DIM];
        for axis in 0..self.dim() {
            p[axis] = self.lower[axis] + idx[axis] as f64 * self.spacing(axis);
        }
        p
    }

    fn neighbor(&self, node: usize, axis: usize, offset: isize) -> Option<usize> {
        let stride = self.stride(axis);
        let k = (node / stride) % self.nodes[axis];
        let k_new = k as isize + offset;
        if k_new < 0 || k_new > self.cells[axis] as isize {
            None
        } else {
            Some((node as isize + offset * stride as isize) as usize)
        }
    }
}

/// Either kind of spatial grid, for fields that may live on both.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpatialGrid {
    Torus(TorusGrid),
    Box(BoxGrid),
}

impl SpatialGrid {
    fn inner(&self) -> &dyn Grid {
        match self {
            SpatialGrid::Torus(g) => g,
            SpatialGrid::Box(g) => g,
        }
    }

    /// Nodes where a centred second-order stencil is available.
    pub fn stencil_nodes(&self) -> Vec<usize> {
        match self {
            SpatialGrid::Torus(g) => (0..g.len()).collect(),
            SpatialGrid::Box(g) => g.interior_nodes(),
        }
    }
}

impl Grid for SpatialGrid {
    fn dim(&self) -> usize {
        self.inner().dim()
    }

    fn shape(&self) -> &[usize] {
        match self {
            SpatialGrid::Torus(g) => g.shape(),
            SpatialGrid::Box(g) => g.shape(),
        }
    }

    fn spacing(&self, axis: usize) -> f64 {
        self.inner().spacing(axis)
    }

    fn coord(&self, node: usize) -> Point {
        self.inner().coord(node)
    }

    fn neighbor(&self, node: usize, axis: usize, offset: isize) -> Option<usize> {
        self.inner().neighbor(node, axis, offset)
    }
}

impl From<TorusGrid> for SpatialGrid {
    fn from(g: TorusGrid) -> Self {
        SpatialGrid::Torus(g)
    }
}

impl From<BoxGrid> for SpatialGrid {
    fn from(g: BoxGrid) -> Self {
        SpatialGrid::Box(g)
    }
}

/// Uniform time levels `t_k = t0 + k dt`, `k = 0..=steps`, ending at `t = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t0: f64,
    steps: usize,
    period: Option<f64>,
}

impl TimeGrid {
    pub fn new(t0: f64, steps: usize, period: Option<f64>) -> Result<Self> {
        if !(t0 < 0.0) || !t0.is_finite() {
            return Err(Error::InvalidArgument("time grid must start at t0 < 0".into()));
        }
        if steps == 0 {
            return Err(Error::InvalidArgument("time grid needs at least one step".into()));
        }
        let grid = Self { t0, steps, period };
        if let Some(a0) = period {
            if !(a0 > 0.0) {
                return Err(Error::InvalidArgument("temporal period must be positive".into()));
            }
            let ratio = a0 / grid.dt();
            if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) || ratio.round() < 1.0 {
                return Err(Error::InvalidArgument(format!(
                    "time step {} does not divide the period {a0}",
                    grid.dt()
                )));
            }
        }
        Ok(grid)
    }

    /// Grid with step `dt` covering `[t0, 0]`; `-t0 / dt` must be an integer.
    pub fn with_step(t0: f64, dt: f64, period: Option<f64>) -> Result<Self> {
        let steps = -t0 / dt;
        if !(dt > 0.0) || (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return Err(Error::InvalidArgument(format!("dt = {dt} does not divide [t0, 0]")));
        }
        Self::new(t0, steps.round() as usize, period)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn period(&self) -> Option<f64> {
        self.period
    }

    pub fn dt(&self) -> f64 {
        -self.t0 / self.steps as f64
    }

    pub fn time(&self, step: usize) -> f64 {
        if step == self.steps {
            0.0
        } else {
            self.t0 + step as f64 * self.dt()
        }
    }

    /// Number of time levels, `steps + 1`.
    pub fn levels(&self) -> usize {
        self.steps + 1
    }
}
