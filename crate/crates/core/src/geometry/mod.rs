//! The perforated domain, its quadrature rules and purely geometric quantities.

mod domain;
mod metrics;
mod quadrature;
mod tubular;

use thiserror::Error;

pub use domain::{CurveFrame, DomainSpec, FourierMode, Hole};
pub(crate) use metrics::{boundary_distance, star_shaped_about};
pub use metrics::{
    delta, diameter, interior_sphere_radius, project_to_outer, rho_e_rho_i, symmetric_difference_ratio, OuterProjection,
};
pub use quadrature::{
    build_area_quadrature, build_boundary_quadrature, AreaQuadrature, BoundaryComponent, BoundaryQuadrature, Component,
    QuadratureResolution, Quadratures, AREA_TOLERANCE,
};
pub(crate) use quadrature::{gauss_legendre, uniform_angles};
pub use tubular::{tubular_sets, TubularSets};

/// Planar point or vector.
pub type Point = nalgebra::Vector2<f64>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GeometryError {
    #[error("invalid domain: {invariant} ({detail})")]
    InvalidDomain { invariant: &'static str, detail: String },
    #[error("invalid resolution: {0}")]
    Resolution(String),
    #[error("area quadrature misses the exact area by {achieved:e} (tolerance {tolerance:e})")]
    AreaTolerance { achieved: f64, tolerance: f64 },
    #[error("exterior point ({x}, {y})")]
    ExteriorPoint { x: f64, y: f64 },
    #[error("center outside domain: ({x}, {y})")]
    CenterOutside { x: f64, y: f64 },
    #[error("no uniform interior sphere at resolution (radius {radius:e})")]
    NoInteriorSphere { radius: f64 },
    #[error("collar width {width} exceeds the interior sphere radius {interior_radius}")]
    TubeTooWide { width: f64, interior_radius: f64 },
}
