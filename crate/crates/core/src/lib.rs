//! Discrete laboratory for dead-core free boundary problems driven by
//! degenerate fully nonlinear operators with strong absorption.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod grid;
pub mod model;
pub mod operators;
pub mod radial;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{Domain, Grid, Point, ScalarField};
pub use model::{kappa, theta_liouville, FitResult, OperatorKind, ProblemParams, ValidatedParams};
pub use solver::{solve_dirichlet, BoundaryData, DirichletProblem, SolveReport, SolverConfig};
