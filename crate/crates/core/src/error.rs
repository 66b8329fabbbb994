//! Error type shared by all modules.

use thiserror::Error;

use crate::calculus::SolveReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("space has no points")]
    EmptySpace,

    #[error("distance matrix not symmetric at ({i},{j}): {forward} vs {backward}")]
    NonSymmetric {
        i: usize,
        j: usize,
        forward: f64,
        backward: f64,
    },

    #[error("triangle inequality violated: d({i},{k}) = {direct} > d({i},{j}) + d({j},{k}) = {via}")]
    TriangleViolation {
        i: usize,
        j: usize,
        k: usize,
        direct: f64,
        via: f64,
    },

    #[error("mass at index {0} is not strictly positive")]
    NonPositiveMass(usize),

    #[error("filling graph is disconnected: {unreached} of {total} vertices unreachable from the root")]
    DisconnectedFilling { unreached: usize, total: usize },

    #[error("net hierarchy (alpha {net_alpha}, depth {net_depth}) does not match params (alpha {param_alpha}, depth {param_depth})")]
    ParamMismatch {
        net_alpha: f64,
        net_depth: usize,
        param_alpha: f64,
        param_depth: usize,
    },

    #[error("Neumann data incompatible: weighted sum {sum} exceeds tolerance {tol}")]
    IncompatibleData { sum: f64, tol: f64 },

    #[error("solver did not converge after {iterations} iterations (residual {residual}); best iterate attached")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        best: Box<SolveReport>,
    },

    #[error("input function is constant")]
    ConstantInput,

    #[error("function has negative values (min {0})")]
    NegativeValues(f64),

    #[error("neighbor graph on Z is disconnected; spectrum degenerate")]
    DegenerateSpectrum,

    #[error("radius {radius} outside the admissible range (0, {max})")]
    RadiusOutOfRange { radius: f64, max: f64 },

    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),
}

pub type Result<T> = std::result::Result<T, Error>;
