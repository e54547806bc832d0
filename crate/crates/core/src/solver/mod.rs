//! Solutions of `Δu = 1` as a quadratic plus logarithmic sources.

mod field;
mod lstsq;
mod mfs;
mod model;

use thiserror::Error;

pub use field::{Field, FieldEval, HarmonicField, QuadraticDeviation};
pub use mfs::{
    solve_cauchy, solve_dirichlet, BoundaryResidual, CauchyOptions, Condition, FailedSolve, SolveDiagnostics,
    RESIDUAL_TOLERANCE,
};
pub use model::{radial_reference, singularities_in_region, FieldModel, RadialReference};

use crate::geometry::GeometryError;
use crate::Point;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SolverError {
    #[error("invalid solver input: {0}")]
    InvalidInput(String),
    #[error("solver did not converge: boundary residual {:e}", .0.diagnostics.max_residual())]
    NotConverged(Box<FailedSolve>),
    #[error("continuation failed: boundary residual {:e}", .0.diagnostics.max_residual())]
    ContinuationFailed(Box<FailedSolve>),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Closed-form value, gradient and Hessian of `field` at `x`.
pub fn evaluate(field: &dyn Field, x: Point) -> FieldEval {
    field.eval(x)
}
