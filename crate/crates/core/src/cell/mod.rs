//! Periodic correctors and the exact ancient solutions built from them.

mod ancient;
mod spatial;
mod temporal;

pub use ancient::{build_ancient, mean_identity_check, AncientSolution};
pub use spatial::{cell_residual, solve_spatial_corrector, CellProblem, CellSolution};
pub use temporal::{sample_period, temporal_corrector, TemporalCorrector};

#[cfg(test)]
mod tests;
