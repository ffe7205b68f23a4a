use serde::{Deserialize, Serialize};

use super::grid::{Grid, SpatialGrid, TimeGrid, TorusGrid};
use super::stencil::discrete_hessian;
use crate::error::{Error, Result};
use crate::linalg::SymMat;

/// Options for [`PeriodicField::sample`].
#[derive(Clone, Copy, Debug, Default)]
pub struct SampleOptions {
    pub require_positive: bool,
    /// Rescale so the sample mean is exactly one.
    pub normalize: bool,
}

/// Samples of a periodic function on a [`TorusGrid`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicField {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl PeriodicField {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} samples for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("sample {i} is not finite")));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: TorusGrid, c: f64) -> Self {
        let len = grid.len();
        Self { grid, values: vec![c; len] }
    }

    pub fn sample(grid: &TorusGrid, f: impl Fn(&[f64]) -> f64, opts: SampleOptions) -> Result<Self> {
        let n = grid.dim();
        let values: Vec<f64> = (0..grid.len()).map(|i| f(&grid.coord(i)[..n])).collect();
        let mut field = Self::new(grid.clone(), values)?;
        if opts.require_positive {
            field.check_positive()?;
        }
        if opts.normalize {
            let mean = field.mean();
            if !(mean.abs() > 0.0) {
                return Err(Error::InvalidArgument("cannot normalize a zero-mean field".into()));
            }
            field.values.iter_mut().for_each(|v| *v /= mean);
        }
        Ok(field)
    }

    pub fn check_positive(&self) -> Result<()> {
        match self.values.iter().position(|&v| !(v > 0.0)) {
            Some(index) => Err(Error::Positivity { index, value: self.values[index] }),
            None => Ok(()),
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Arithmetic mean of the samples, which is the trapezoidal rule on the torus.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn hessian(&self, node: usize) -> SymMat {
        discrete_hessian(&self.grid, &self.values, node).expect("torus stencils never leave the grid")
    }

    /// Multilinear interpolation, extended periodically to all of `R^n`.
    pub fn interpolate(&self, x: &[f64]) -> f64 {
        let n = self.grid.dim();
        let res = self.grid.resolution();
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..n {
            let s = x[a] / self.grid.spacing(a);
            let fl = s.floor();
            let mut f = s - fl;
            let mut k = (fl as i64).rem_euclid(res[a] as i64) as usize;
            if f >= 1.0 {
                f = 0.0;
                k = (k + 1) % res[a];
            }
            base[a] = k;
            frac[a] = f;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut idx = [0usize; 3];
            for a in 0..n {
                if corner >> a & 1 == 1 {
                    w *= frac[a];
                    idx[a] = (base[a] + 1) % res[a];
                } else {
                    w *= 1.0 - frac[a];
                    idx[a] = base[a];
                }
            }
            if w != 0.0 {
                acc += w * self.values[self.grid.flat_index(&idx[..n])];
            }
        }
        acc
    }

    /// The field translated by whole grid cells: `out(x) = self(x + shift * h)`.
    pub fn shifted(&self, cells: &[isize]) -> PeriodicField {
        let n = self.grid.dim();
        let values = (0..self.grid.len())
            .map(|node| {
                let mut src = node;
                for (axis, &c) in cells.iter().enumerate().take(n) {
                    src = self.grid.wrap(src, axis, c);
                }
                self.values[src]
            })
            .collect();
        PeriodicField { grid: self.grid.clone(), values }
    }
}

/// Samples on a spatial grid at every level of a [`TimeGrid`], stored
/// level-major: `values[step * nodes + node]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeField {
    grid: SpatialGrid,
    time: TimeGrid,
    values: Vec<f64>,
}

impl SpaceTimeField {
    pub fn new(grid: SpatialGrid, time: TimeGrid, values: Vec<f64>) -> Result<Self> {
        let expected = grid.len() * time.levels();
        if values.len() != expected {
            return Err(Error::GridMismatch(format!(
                "{} samples for {} space-time nodes",
                values.len(),
                expected
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("sample {i} is not finite")));
        }
        Ok(Self { grid, time, values })
    }

    pub fn zeros(grid: SpatialGrid, time: TimeGrid) -> Self {
        let len = grid.len() * time.levels();
        Self { grid, time, values: vec![0.0; len] }
    }

    pub fn sample(grid: SpatialGrid, time: TimeGrid, f: impl Fn(&[f64], f64) -> f64) -> Result<Self> {
        let n = grid.dim();
        let mut values = Vec::with_capacity(grid.len() * time.levels());
        for step in 0..time.levels() {
            let t = time.time(step);
            for node in 0..grid.len() {
                values.push(f(&grid.coord(node)[..n], t));
            }
        }
        Self::new(grid, time, values)
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn time(&self) -> &TimeGrid {
        &self.time
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nodes(&self) -> usize {
        self.grid.len()
    }

    pub fn slice(&self, step: usize) -> &[f64] {
        let n = self.nodes();
        &self.values[step * n..(step + 1) * n]
    }

    pub fn slice_mut(&mut self, step: usize) -> &mut [f64] {
        let n = self.nodes();
        &mut self.values[step * n..(step + 1) * n]
    }

    pub fn value(&self, node: usize, step: usize) -> f64 {
        self.values[step * self.nodes() + node]
    }

    /// `(u(., t_k) - u(., t_{k-1})) / dt`.
    pub fn backward_dt(&self, node: usize, step: usize) -> Result<f64> {
        if step == 0 {
            return Err(Error::NoPredecessor { step });
        }
        Ok((self.value(node, step) - self.value(node, step - 1)) / self.time.dt())
    }

    pub fn hessian(&self, node: usize, step: usize) -> Result<SymMat> {
        discrete_hessian(&self.grid, self.slice(step), node)
    }

    pub fn same_shape(&self, other: &SpaceTimeField) -> bool {
        self.grid == other.grid && self.time == other.time
    }

    /// `max |self - other|` over all samples.
    pub fn max_abs_diff(&self, other: &SpaceTimeField) -> Result<f64> {
        if !self.same_shape(other) {
            return Err(Error::GridMismatch("fields live on different grids".into()));
        }
        Ok(self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::grid::BoxGrid;
    use std::f64::consts::PI;

    #[test]
    fn constant_one_has_unit_mean() {
        let g = TorusGrid::unit(2, 16).unwrap();
        let f = PeriodicField::sample(&g, |_| 1.0, SampleOptions::default()).unwrap();
        assert!(f.values().iter().all(|&v| v == 1.0));
        assert_eq!(f.mean(), 1.0);
    }

    #[test]
    fn cosine_perturbation_has_unit_mean() {
        let g = TorusGrid::unit(1, 32).unwrap();
        let f = PeriodicField::sample(&g, |x| 1.0 + 0.5 * (2.0 * PI * x[0]).cos(), SampleOptions::default())
            .unwrap();
        assert!((f.mean() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn normalization_divides_by_mean() {
        let g = TorusGrid::unit(1, 16).unwrap();
        let opts = SampleOptions { normalize: true, require_positive: true };
        let f = PeriodicField::sample(&g, |x| 1.3 + 0.2 * (2.0 * PI * x[0]).sin(), opts).unwrap();
        assert!((f.mean() - 1.0).abs() < 1e-14);
        assert!((f.values()[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn nonpositive_sample_rejected() {
        let g = TorusGrid::unit(1, 16).unwrap();
        let opts = SampleOptions { require_positive: true, ..Default::default() };
        let err = PeriodicField::sample(&g, |x| (2.0 * PI * x[0]).cos(), opts).unwrap_err();
        assert!(matches!(err, Error::Positivity { .. }));
    }

    #[test]
    fn interpolation_reproduces_nodes_and_wraps() {
        let g = TorusGrid::new(&[1.0, 2.0], &[8, 16]).unwrap();
        let f = PeriodicField::sample(&g, |x| x[0] + 10.0 * x[1], SampleOptions::default()).unwrap();
        for node in 0..g.len() {
            let x = g.coord(node);
            assert_eq!(f.interpolate(&x[..2]), f.values()[node]);
            let shifted = [x[0] + 3.0, x[1] - 4.0];
            assert!((f.interpolate(&shifted) - f.values()[node]).abs() < 1e-12);
        }
        // halfway between two nodes along x1
        let mid = f.interpolate(&[0.0625, 0.0]);
        assert!((mid - 0.0625).abs() < 1e-12);
    }

    #[test]
    fn backward_difference() {
        let g = BoxGrid::cube(1, 0.0, 1.0, 8).unwrap();
        let tg = TimeGrid::new(-1.0, 8, None).unwrap();
        let u = SpaceTimeField::sample(g.clone().into(), tg.clone(), |_, t| -t).unwrap();
        assert_eq!(u.backward_dt(3, 5).unwrap(), -1.0);
        assert!(matches!(u.backward_dt(3, 0), Err(Error::NoPredecessor { step: 0 })));

        let v = SpaceTimeField::sample(g.clone().into(), tg.clone(), |_, t| -t * t).unwrap();
        let dt = tg.dt();
        for step in 1..tg.levels() {
            let t = tg.time(step);
            assert!((v.backward_dt(2, step).unwrap() - (-2.0 * t + dt)).abs() < 1e-12);
        }

        let c = SpaceTimeField::sample(g.into(), tg, |x, _| x[0] * x[0]).unwrap();
        assert_eq!(c.backward_dt(4, 2).unwrap(), 0.0);
    }
}
