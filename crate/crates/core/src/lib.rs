//! Numerical toolkit for the parabolic Monge-Ampere equation
//! `-u_t det D^2 u = f1(x) f2(t)` with periodic data.
//!
//! * [`fields`]: grids, sampled fields and finite-difference stencils.
//! * [`mongeampere`]: the operator, its linearization, convexity checks and
//!   closed-form barriers.
//! * [`cell`]: periodic correctors and exact ancient solutions.
//! * [`ibvp`]: implicit time stepping on box cylinders and homogenization sweeps.
//! * [`liouville`]: difference quotients, decomposition fitting and level-set geometry.
//! * [`expr`], [`config`], [`dump`], [`runner`]: the experiment driver behind the CLI.

pub mod cell;
pub mod config;
pub mod dump;
pub mod error;
pub mod expr;
pub mod fields;
pub mod function;
pub mod ibvp;
pub mod linalg;
pub mod liouville;
pub mod mongeampere;
pub mod runner;

pub use error::{Error, Result};
pub use function::{FnFunction, SpaceTimeFunction};
