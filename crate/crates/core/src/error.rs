use thiserror::Error;

use crate::model::ParamError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported dimension {0}; only 1 and 2 are implemented")]
    Dimension(usize),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("field has {found} values, grid has {expected} nodes")]
    Shape { expected: usize, found: usize },
    #[error("non-finite value {value} at node {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("invalid parameters: {}", join(.0))]
    Params(Vec<ParamError>),
    #[error("exponent undefined: mu = {mu} must be below gamma + 1 = {}", .gamma + 1.0)]
    BorderlineExponent { gamma: f64, mu: f64 },
    #[error("{0}")]
    Domain(String),
    #[error("direction ({0}, {1}) is not representable on the lattice")]
    NonLatticeDirection(f64, f64),
    #[error("ball of radius {r} around ({}, {}) exits the grid", .x0[0], .x0[1])]
    BallExitsDomain { x0: [f64; 2], r: f64 },
    #[error("only {0} usable radii; at least 3 are needed for a fit")]
    TooFewRadii(usize),
    #[error("sup over B_{r} vanishes; the point is not on the free boundary of the positivity set")]
    VanishingSup { r: f64 },
    #[error("free boundary is empty")]
    EmptyFreeBoundary,
    #[error("{what} diverged after {iterations} iterations (residual trace: {trace:?})")]
    Diverged { what: &'static str, iterations: usize, trace: Vec<f64> },
    #[error("{what} did not converge in {iterations} iterations (residual trace: {trace:?})")]
    NotConverged { what: &'static str, iterations: usize, trace: Vec<f64> },
}

fn join(errs: &[ParamError]) -> String {
    errs.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
