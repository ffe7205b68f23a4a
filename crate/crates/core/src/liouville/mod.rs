//! Difference quotients, decomposition fitting and level-set geometry for
//! ancient solutions.

mod fit;
mod geometry;
mod quotients;

pub use fit::{asymptotic_check, discrete_pde_residual, fit_decomposition, unit_directions, AsymptoticReport, DecompositionFit, FitOptions, FitResiduals};
pub use geometry::{
    alpha, john_normalization_check, level_set_report, mvee, Ellipsoid, JohnNormalization, LevelSetReport, Recentered,
    MVEE_TOL,
};
pub use quotients::{
    check_quotient_subsolution, check_quotient_subsolution_field, second_diff_quotient, second_diff_quotient_field,
    time_diff_quotient, LatticeDirectionSet, SubsolutionReport,
};
