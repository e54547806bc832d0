use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::field::{log_kernel, log_kernel_flux, Field};
use super::lstsq::{solve_least_squares, LeastSquaresFit, Regularization};
use super::model::FieldModel;
use super::SolverError;
use crate::geometry::{uniform_angles, Component, DomainSpec};
use crate::Point;

/// Residual above which a solve is reported as failed.
pub const RESIDUAL_TOLERANCE: f64 = 1e-6;

const CONDITION_LIMIT: f64 = 1e12;
const TRUNCATION_RCOND: f64 = 1e-14;

/// Which boundary condition a residual refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    Value,
    Flux,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryResidual {
    pub component: Component,
    pub condition: Condition,
    pub max_abs: f64,
}

/// Quality report attached to every solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub residuals: Vec<BoundaryResidual>,
    /// Ratio of extreme singular values of the column-scaled collocation matrix.
    pub condition: f64,
    pub regularization: f64,
    pub truncated: bool,
}

impl SolveDiagnostics {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.max_abs).fold(0.0, nan_max)
    }
}

/// A solve whose residual missed the tolerance, kept for inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct FailedSolve {
    pub model: FieldModel,
    pub diagnostics: SolveDiagnostics,
}

/// One collocation condition: a point, its normal and the condition imposed there.
struct Row {
    component: Component,
    point: Point,
    normal: Point,
    condition: Condition,
    target: f64,
}

fn boundary_rows(spec: &DomainSpec, n: usize, shift: f64, flux: Option<f64>, with_holes: bool) -> Vec<Row> {
    let mut rows = Vec::new();
    for theta in uniform_angles(n, shift) {
        let f = spec.frame(theta);
        rows.push(Row {
            component: Component::Outer,
            point: f.point,
            normal: f.normal(),
            condition: Condition::Value,
            target: 0.0,
        });
        if let Some(c) = flux {
            rows.push(Row {
                component: Component::Outer,
                point: f.point,
                normal: f.normal(),
                condition: Condition::Flux,
                target: c,
            });
        }
    }
    if with_holes {
        for (i, h) in spec.holes().iter().enumerate() {
            for phi in uniform_angles(n, shift) {
                rows.push(Row {
                    component: Component::Hole(i),
                    point: h.point(phi),
                    normal: h.normal(phi),
                    condition: Condition::Value,
                    target: h.dirichlet_value,
                });
            }
        }
    }
    rows
}

fn fit(rows: &[Row], sources: &[Point], anchor: Point, mode: Regularization) -> (FieldModel, LeastSquaresFit) {
    let quad = FieldModel::quadratic(anchor);
    let cols = sources.len() + 1;
    let entries: Vec<Vec<f64>> = rows
        .par_iter()
        .map(|row| {
            let mut line = Vec::with_capacity(cols);
            match row.condition {
                Condition::Value => {
                    line.extend(sources.iter().map(|s| log_kernel(row.point - s).value));
                    line.push(1.0);
                }
                Condition::Flux => {
                    line.extend(sources.iter().map(|s| log_kernel_flux(row.point - s, row.normal)));
                    line.push(0.0);
                }
            }
            line
        })
        .collect();
    let a = DMatrix::from_fn(rows.len(), cols, |i, j| entries[i][j]);
    let b = DVector::from_iterator(
        rows.len(),
        rows.iter().map(|row| {
            let q = quad.particular(row.point);
            match row.condition {
                Condition::Value => row.target - q.value,
                Condition::Flux => row.target - q.normal_derivative(row.normal),
            }
        }),
    );
    let solved = solve_least_squares(a, &b, mode);
    let model = FieldModel {
        anchor,
        sources: sources.to_vec(),
        coefficients: solved.solution.iter().take(sources.len()).copied().collect(),
        constant: solved.solution[sources.len()],
    };
    (model, solved)
}

/// Maximum that lets a NaN through instead of skipping it.
fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

fn residuals(model: &FieldModel, rows: &[Row]) -> Vec<BoundaryResidual> {
    let errors: Vec<f64> = rows
        .par_iter()
        .map(|row| {
            let e = model.eval(row.point);
            match row.condition {
                Condition::Value => (e.value - row.target).abs(),
                Condition::Flux => (e.normal_derivative(row.normal) - row.target).abs(),
            }
        })
        .collect();
    let mut out: Vec<BoundaryResidual> = Vec::new();
    for (row, err) in rows.iter().zip(errors) {
        match out.iter_mut().find(|r| r.component == row.component && r.condition == row.condition) {
            Some(r) => r.max_abs = nan_max(r.max_abs, err),
            None => out.push(BoundaryResidual { component: row.component, condition: row.condition, max_abs: err }),
        }
    }
    out
}

fn outer_ring(spec: &DomainSpec, n: usize, offset: f64) -> impl Iterator<Item = Point> + '_ {
    uniform_angles(n, 0.0).map(move |t| offset * spec.outer_point(t))
}

fn hole_rings(spec: &DomainSpec, n: usize, offset: f64) -> impl Iterator<Item = Point> + '_ {
    spec.holes().iter().flat_map(move |h| {
        let inner = h.radius / offset;
        uniform_angles(n, 0.0).map(move |t| h.center + inner * Point::new(t.cos(), t.sin()))
    })
}

/// Well-posed solve with `u = 0` on the outer curve and `u = g` on each hole.
///
/// Sources sit on the outer curve scaled by `offset_ratio` and on circles of
/// radius `ρ/offset_ratio` inside each hole; conditions are collocated at twice
/// as many boundary points and the residual is measured on a finer shifted set.
pub fn solve_dirichlet(
    spec: &DomainSpec,
    n_src_per_ring: usize,
    offset_ratio: f64,
) -> Result<(FieldModel, SolveDiagnostics), SolverError> {
    if n_src_per_ring < 32 {
        return Err(SolverError::InvalidInput(format!("n_src_per_ring must be at least 32, got {n_src_per_ring}")));
    }
    if !(1.1..=3.0).contains(&offset_ratio) {
        return Err(SolverError::InvalidInput(format!("offset_ratio must lie in [1.1, 3], got {offset_ratio}")));
    }
    let sources: Vec<Point> =
        outer_ring(spec, n_src_per_ring, offset_ratio).chain(hole_rings(spec, n_src_per_ring, offset_ratio)).collect();
    let rows = boundary_rows(spec, 2 * n_src_per_ring, 0.0, None, true);
    let mode = Regularization::Truncation { rcond: TRUNCATION_RCOND, condition_limit: CONDITION_LIMIT };
    let (model, solved) = fit(&rows, &sources, Point::zeros(), mode);
    let check = boundary_rows(spec, 4 * n_src_per_ring, 0.25, None, true);
    let diagnostics = SolveDiagnostics {
        residuals: residuals(&model, &check),
        condition: solved.condition,
        regularization: solved.regularization,
        truncated: solved.truncated,
    };
    if !(diagnostics.max_residual() <= RESIDUAL_TOLERANCE) {
        return Err(SolverError::NotConverged(Box::new(FailedSolve { model, diagnostics })));
    }
    Ok((model, diagnostics))
}

/// Source placement for Cauchy continuation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CauchyOptions {
    pub n_src_per_ring: usize,
    /// Outer sources at `outer_offset · x(θ)`.
    pub outer_offset: f64,
    /// Interior sources at `x(θ)/inner_offset`, or at `ρ/inner_offset` inside each hole.
    pub inner_offset: f64,
    /// Tikhonov weight relative to the largest squared singular value.
    pub tikhonov: f64,
}

impl Default for CauchyOptions {
    fn default() -> Self {
        Self { n_src_per_ring: 128, outer_offset: 2.0, inner_offset: 3.0, tikhonov: 1e-14 }
    }
}

/// Continues the Cauchy data `u = 0`, `∂_ν u = flux` from the outer curve inward.
///
/// Without holes the interior sources lie on the outer curve shrunk by
/// `inner_offset`, so the result is valid only outside that ring. With holes
/// the interior sources are placed inside the holes instead, which keeps every
/// singularity out of the perforated region. Hole boundary values are ignored.
pub fn solve_cauchy(
    spec: &DomainSpec,
    flux: f64,
    options: CauchyOptions,
) -> Result<(FieldModel, SolveDiagnostics), SolverError> {
    let n = options.n_src_per_ring;
    if n < 32 {
        return Err(SolverError::InvalidInput(format!("n_src_per_ring must be at least 32, got {n}")));
    }
    if !(options.tikhonov >= 0.0) {
        return Err(SolverError::InvalidInput(format!(
            "tikhonov weight must be nonnegative, got {}",
            options.tikhonov
        )));
    }
    if !(options.outer_offset > 1.0 && options.inner_offset > 1.0) {
        return Err(SolverError::InvalidInput("source offsets must exceed 1".into()));
    }
    let mut sources: Vec<Point> = outer_ring(spec, n, options.outer_offset).collect();
    if spec.holes().is_empty() {
        sources.extend(outer_ring(spec, n, 1.0 / options.inner_offset));
    } else {
        sources.extend(hole_rings(spec, n, options.inner_offset));
    }
    let rows = boundary_rows(spec, 2 * n, 0.0, Some(flux), false);
    let (model, solved) = fit(&rows, &sources, Point::zeros(), Regularization::Tikhonov { lambda: options.tikhonov });
    let check = boundary_rows(spec, 4 * n, 0.25, Some(flux), false);
    let diagnostics = SolveDiagnostics {
        residuals: residuals(&model, &check),
        condition: solved.condition,
        regularization: solved.regularization,
        truncated: false,
    };
    if !(diagnostics.max_residual() <= RESIDUAL_TOLERANCE) {
        return Err(SolverError::ContinuationFailed(Box::new(FailedSolve { model, diagnostics })));
    }
    Ok((model, diagnostics))
}
