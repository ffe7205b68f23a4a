use thiserror::Error;

use crate::expr::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("node {node} is outside the stencil support of the grid")]
    OutOfStencil { node: usize },

    #[error("step {step} has no predecessor for a backward difference")]
    NoPredecessor { step: usize },

    #[error("sample {index} is not positive ({value})")]
    Positivity { index: usize, value: f64 },

    #[error("spatial Hessian is not positive definite{}", at_node(*.node))]
    ConvexityLoss { node: Option<usize> },

    #[error("time derivative is not negative (u_t = {ut})")]
    MonotonicityLoss { ut: f64 },

    #[error("monotonicity gate failed at node {node}: u_now - u_prev = {excess:e}")]
    MonotonicityGate { node: usize, excess: f64 },

    #[error("point lies outside the barrier domain")]
    OutsideDomain,

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("time step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("temporal data has mean {mean}, expected 1: the corrector would not be periodic")]
    Compatibility { mean: f64 },

    #[error("grid resolves only {nodes_per_period} nodes per oscillation period (need at least 8)")]
    Resolution { nodes_per_period: f64 },

    #[error("decomposition fit failed: {0}")]
    FitFailure(String),

    #[error("sublevel set touches the sampling window boundary")]
    LevelSetClipped,

    #[error("level set contains only {0} sample points")]
    LevelSetTooSmall(usize),

    #[error("minimum-volume ellipsoid iteration did not converge (gap {gap:e})")]
    MveeNonConvergence { gap: f64 },

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed field dump: {0}")]
    Dump(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn at_node(node: Option<usize>) -> String {
    match node {
        Some(node) => format!(" at node {node}"),
        None => String::new(),
    }
}

impl Error {
    /// Short machine-readable tag used in error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::GridMismatch(_) => "grid_mismatch",
            Error::OutOfStencil { .. } => "out_of_stencil",
            Error::NoPredecessor { .. } => "no_predecessor",
            Error::Positivity { .. } => "positivity",
            Error::ConvexityLoss { .. } => "convexity_loss",
            Error::MonotonicityLoss { .. } => "monotonicity_loss",
            Error::MonotonicityGate { .. } => "monotonicity_gate",
            Error::OutsideDomain => "outside_domain",
            Error::NonConvergence { .. } => "non_convergence",
            Error::Step { source, .. } => source.kind(),
            Error::Compatibility { .. } => "compatibility",
            Error::Resolution { .. } => "resolution",
            Error::FitFailure(_) => "fit_failure",
            Error::LevelSetClipped => "level_set_clipped",
            Error::LevelSetTooSmall(_) => "level_set_too_small",
            Error::MveeNonConvergence { .. } => "mvee_non_convergence",
            Error::Parse(_) => "parse",
            Error::Config(_) => "config",
            Error::Dump(_) => "dump",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    /// True for errors caused by the input rather than by a solver.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::GridMismatch(_)
                | Error::Positivity { .. }
                | Error::Compatibility { .. }
                | Error::Resolution { .. }
                | Error::Parse(_)
                | Error::Config(_)
                | Error::Json(_)
        )
    }
}
