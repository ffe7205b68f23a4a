//! Uniform grids, sampled fields and finite-difference operators.

mod field;
mod grid;
mod stencil;

pub use field::{PeriodicField, SampleOptions, SpaceTimeField};
pub use grid::{BoxGrid, BoxGridSpec, Grid, Point, SpatialGrid, TimeGrid, TorusGrid, MIN_RESOLUTION};
pub use stencil::{
    discrete_hessian, periodic_d1, periodic_d2, periodic_hessian, periodic_hessian_field, PeriodicContraction,
    StencilOrder,
};
