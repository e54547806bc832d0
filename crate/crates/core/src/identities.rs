//! Both sides of the integral identities satisfied by solutions of the torsion problem.
//!
//! Left-hand sides are area integrals built from Hessians; right-hand sides use
//! boundary quadratures only. Normals on hole boundaries point into the holes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{BoundaryComponent, Component, DomainSpec, Quadratures};
use crate::solver::{Field, FieldEval};
use crate::Point;

const N: f64 = crate::DIM as f64;

/// Default tolerance on `max_Γ |u_ν − c|` for the overdetermined identity.
pub const OVERDETERMINATION_TOLERANCE: f64 = 1e-6;

/// Tolerance on the mismatch between the two estimates of the boundary flux constant.
pub const FLUX_MISMATCH_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum IdentityError {
    #[error("hypothesis failure: max |u_ν − c| on the outer boundary is {max_deviation:e} (tolerance {tolerance:e})")]
    NotOverdetermined { max_deviation: f64, tolerance: f64 },
    #[error("quadrature/solver inconsistency: flux estimates {balance} and {direct} differ by {mismatch:e}")]
    InconsistentFlux { balance: f64, direct: f64, mismatch: f64 },
    #[error("numerical-consistency failure: negative deficit {value:e} at ({x}, {y})")]
    NegativeDeficit { value: f64, x: f64, y: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityId {
    Pohozaev,
    Fundamental,
    Overdetermined,
    ValueC,
    DivergenceX,
}

/// One named contribution to a right-hand side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermBreakdown {
    pub component: Component,
    pub term: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub id: IdentityId,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_residual: f64,
    pub rel_residual: f64,
    pub breakdown: Vec<TermBreakdown>,
}

impl IdentityReport {
    fn new(id: IdentityId, lhs: f64, breakdown: Vec<TermBreakdown>) -> Self {
        let rhs = breakdown.iter().map(|t| t.value).sum::<f64>();
        let abs_residual = (lhs - rhs).abs();
        Self { id, lhs, rhs, abs_residual, rel_residual: abs_residual / (lhs.abs() + rhs.abs() + 1.0), breakdown }
    }

    /// Sum of the breakdown entries with the given term name.
    pub fn group(&self, term: &str) -> f64 {
        self.breakdown.iter().filter(|t| t.term == term).map(|t| t.value).sum()
    }
}

fn term(component: Component, name: &str, value: f64) -> TermBreakdown {
    TermBreakdown { component, term: name.to_string(), value }
}

fn on_boundary<F>(field: &dyn Field, curve: &BoundaryComponent, f: F) -> f64
where
    F: Fn(Point, Point, FieldEval) -> f64 + Sync,
{
    curve.integrate(|x, nu| f(x, nu, field.eval(x)))
}

/// `P = |∇u|² − (2/N) u`.
pub fn p_function(field: &dyn Field, x: Point) -> f64 {
    let e = field.eval(x);
    e.gradient.norm_squared() - 2.0 / N * e.value
}

/// `|∇²u|² − (Δu)²/N`, nonnegative by the Cauchy–Schwarz inequality.
pub fn cs_deficit(field: &dyn Field, x: Point) -> Result<f64, IdentityError> {
    let h = field.eval(x).hessian;
    let value = h.norm_squared() - h.trace().powi(2) / N;
    if value < -1e-12 {
        return Err(IdentityError::NegativeDeficit { value, x: x.x, y: x.y });
    }
    Ok(value)
}

/// `|∇²h|²` for the harmonic deviation `h = |x|²/(2N) − u`; equals the deficit when `Δu = 1`.
pub fn deviation_hessian_norm(field: &dyn Field, x: Point) -> f64 {
    let h = nalgebra::Matrix2::identity() / N - field.eval(x).hessian;
    h.norm_squared()
}

/// Rellich–Pohozaev-type identity.
pub fn check_pohozaev(field: &dyn Field, quads: &Quadratures) -> IdentityReport {
    let lhs = (N + 2.0) * quads.area.integrate(|x| field.gradient(x).norm_squared());
    let mut breakdown = Vec::new();
    for curve in &quads.boundary.components {
        match curve.component {
            Component::Outer => {
                let v = on_boundary(field, curve, |x, nu, e| x.dot(&nu) * e.normal_derivative(nu).powi(2));
                breakdown.push(term(curve.component, "outer_flux", v));
            }
            _ => {
                let v = on_boundary(field, curve, |x, nu, e| {
                    let un = e.normal_derivative(nu);
                    let xn = x.dot(&nu);
                    e.value * un - xn * e.value / N + x.dot(&e.gradient) * un / N
                        - xn * e.gradient.norm_squared() / (2.0 * N)
                });
                breakdown.push(term(curve.component, "hole", 2.0 * N * v));
            }
        }
    }
    IdentityReport::new(IdentityId::Pohozaev, lhs, breakdown)
}

fn fundamental_lhs(field: &dyn Field, quads: &Quadratures) -> f64 {
    quads.area.integrate(|x| {
        let e = field.eval(x);
        -e.value * 2.0 * (e.hessian.norm_squared() - e.laplacian().powi(2) / N)
    })
}

fn hole_value_term(field: &dyn Field, curve: &BoundaryComponent) -> f64 {
    on_boundary(field, curve, |x, nu, e| 2.0 * e.value * (x.dot(&nu) / N - e.normal_derivative(nu)))
}

fn hole_gradient_term(field: &dyn Field, curve: &BoundaryComponent) -> f64 {
    on_boundary(field, curve, |x, nu, e| {
        let un = e.normal_derivative(nu);
        let g2 = e.gradient.norm_squared();
        un * g2 - 2.0 * x.dot(&e.gradient) / N * un + g2 * x.dot(&nu) / N + 2.0 / N * e.value * un
            - 2.0 * (e.hessian * e.gradient).dot(&nu) * e.value
    })
}

/// The fundamental identity whose left side integrates `(−u)` times twice the Cauchy–Schwarz deficit.
pub fn check_fundamental(field: &dyn Field, quads: &Quadratures) -> IdentityReport {
    let lhs = fundamental_lhs(field, quads);
    let mut breakdown = Vec::new();
    for curve in &quads.boundary.components {
        match curve.component {
            Component::Outer => {
                let v = on_boundary(field, curve, |x, nu, e| {
                    let un = e.normal_derivative(nu);
                    un * un * (un - x.dot(&nu) / N)
                });
                breakdown.push(term(curve.component, "outer_flux", v));
            }
            _ => {
                breakdown.push(term(curve.component, "hole_value", hole_value_term(field, curve)));
                breakdown.push(term(curve.component, "hole_gradient", hole_gradient_term(field, curve)));
            }
        }
    }
    IdentityReport::new(IdentityId::Fundamental, lhs, breakdown)
}

/// Result of the overdetermined identity together with the flux balance it relies on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverdeterminedCheck {
    pub identity: IdentityReport,
    pub flux_balance: IdentityReport,
    pub max_deviation: f64,
}

/// Largest `|u_ν − c|` over the outer quadrature nodes.
pub fn max_flux_deviation(field: &dyn Field, quads: &Quadratures, flux: f64) -> f64 {
    let outer = quads.boundary.outer();
    outer.nodes.iter().zip(&outer.normals).map(|(x, nu)| (field.gradient(*x).dot(nu) - flux).abs()).fold(0.0, f64::max)
}

/// The identity specialised to `u_ν ≡ c` on the outer boundary.
pub fn check_overdetermined(
    field: &dyn Field,
    spec: &DomainSpec,
    flux: f64,
    quads: &Quadratures,
    tolerance: f64,
) -> Result<OverdeterminedCheck, IdentityError> {
    let max_deviation = max_flux_deviation(field, quads, flux);
    if !(max_deviation <= tolerance) {
        return Err(IdentityError::NotOverdetermined { max_deviation, tolerance });
    }
    let lhs = fundamental_lhs(field, quads);
    let mut breakdown = Vec::new();
    for curve in quads.boundary.holes() {
        let v = on_boundary(field, curve, |x, nu, e| x.dot(&nu) / N - e.normal_derivative(nu));
        breakdown.push(term(curve.component, "flux_squared", flux * flux * v));
        breakdown.push(term(curve.component, "hole_value", hole_value_term(field, curve)));
        breakdown.push(term(curve.component, "hole_gradient", hole_gradient_term(field, curve)));
    }
    let identity = IdentityReport::new(IdentityId::Overdetermined, lhs, breakdown);
    Ok(OverdeterminedCheck { identity, flux_balance: flux_balance(field, spec, quads), max_deviation })
}

/// `∫_Γ u_ν = |Ω| − |ω| − ∫_{∂ω} u_ν`.
pub fn flux_balance(field: &dyn Field, spec: &DomainSpec, quads: &Quadratures) -> IdentityReport {
    let outer = quads.boundary.outer();
    let lhs = on_boundary(field, outer, |_, nu, e| e.normal_derivative(nu));
    let mut breakdown = vec![term(Component::Outer, "region_area", spec.region_area())];
    for curve in quads.boundary.holes() {
        breakdown.push(term(
            curve.component,
            "hole_flux",
            -on_boundary(field, curve, |_, nu, e| e.normal_derivative(nu)),
        ));
    }
    IdentityReport::new(IdentityId::ValueC, lhs, breakdown)
}

/// `∫_{Γ ∪ ∂ω} <x, ν>/N = |Ω| − |ω|`, one term per component.
pub fn check_divergence(spec: &DomainSpec, quads: &Quadratures) -> IdentityReport {
    let breakdown = quads
        .boundary
        .components
        .iter()
        .map(|c| term(c.component, "position_flux", c.integrate(|x, nu| x.dot(&nu) / N)))
        .collect();
    IdentityReport::new(IdentityId::DivergenceX, spec.region_area(), breakdown)
}

/// Two estimates of the constant boundary flux.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxConstant {
    /// `(|Ω| − |ω| − ∫_{∂ω} u_ν)/|Γ|`.
    pub value: f64,
    /// `∫_Γ u_ν / |Γ|`.
    pub direct: f64,
    pub mismatch: f64,
}

/// Boundary flux constant from the divergence theorem, cross-checked against the direct average.
pub fn compute_c(spec: &DomainSpec, field: &dyn Field, quads: &Quadratures) -> Result<FluxConstant, IdentityError> {
    let balance = flux_balance(field, spec, quads);
    let perimeter = quads.boundary.outer().length();
    let value = balance.rhs / perimeter;
    let direct = balance.lhs / perimeter;
    let mismatch = (value - direct).abs();
    if !(mismatch <= FLUX_MISMATCH_TOLERANCE) {
        return Err(IdentityError::InconsistentFlux { balance: value, direct, mismatch });
    }
    Ok(FluxConstant { value, direct, mismatch })
}
