use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DomainSpec, GeometryError, Point};

/// Identifies which boundary curve a quadrature belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Component {
    Outer,
    Hole(usize),
    /// Inner parallel curve of the outer boundary.
    Parallel,
}

impl std::fmt::Display for Component {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Component::Outer => write!(f, "outer"),
            Component::Hole(i) => write!(f, "hole{i}"),
            Component::Parallel => write!(f, "parallel"),
        }
    }
}

/// Nodes, unit normals and arc-length weights on one closed curve.
#[derive(Debug, Clone)]
pub struct BoundaryComponent {
    pub component: Component,
    /// Curve parameter of each node.
    pub params: Vec<f64>,
    pub nodes: Vec<Point>,
    pub normals: Vec<Point>,
    pub weights: Vec<f64>,
}

impl BoundaryComponent {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `∫ f(x, ν) dS` with node evaluations in parallel and a fixed summation order.
    pub fn integrate<F>(&self, f: F) -> f64
    where
        F: Fn(Point, Point) -> f64 + Sync,
    {
        let values: Vec<f64> =
            (0..self.len()).into_par_iter().map(|i| self.weights[i] * f(self.nodes[i], self.normals[i])).collect();
        values.iter().sum()
    }

    /// Same as [`integrate`](Self::integrate) for a vector-valued integrand.
    pub fn integrate_vector<F>(&self, f: F) -> Point
    where
        F: Fn(Point, Point) -> Point + Sync,
    {
        let values: Vec<Point> =
            (0..self.len()).into_par_iter().map(|i| self.weights[i] * f(self.nodes[i], self.normals[i])).collect();
        values.iter().fold(Point::zeros(), |acc, v| acc + v)
    }
}

/// Boundary quadratures of every component of the perforated region.
#[derive(Debug, Clone)]
pub struct BoundaryQuadrature {
    pub components: Vec<BoundaryComponent>,
}

impl BoundaryQuadrature {
    pub fn outer(&self) -> &BoundaryComponent {
        self.components
            .iter()
            .find(|c| c.component == Component::Outer)
            .expect("boundary quadrature always carries the outer curve")
    }

    pub fn holes(&self) -> impl Iterator<Item = &BoundaryComponent> {
        self.components.iter().filter(|c| matches!(c.component, Component::Hole(_)))
    }
}

/// Nodes and weights for integrals over a planar region.
#[derive(Debug, Clone, Default)]
pub struct AreaQuadrature {
    pub nodes: Vec<Point>,
    pub weights: Vec<f64>,
}

impl AreaQuadrature {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate<F>(&self, f: F) -> f64
    where
        F: Fn(Point) -> f64 + Sync,
    {
        let values: Vec<f64> = (0..self.len()).into_par_iter().map(|i| self.weights[i] * f(self.nodes[i])).collect();
        values.iter().sum()
    }

    pub fn integrate_vector<F>(&self, f: F) -> Point
    where
        F: Fn(Point) -> Point + Sync,
    {
        let values: Vec<Point> = (0..self.len()).into_par_iter().map(|i| self.weights[i] * f(self.nodes[i])).collect();
        values.iter().fold(Point::zeros(), |acc, v| acc + v)
    }

    fn push(&mut self, node: Point, weight: f64) {
        if weight > 0.0 {
            self.nodes.push(node);
            self.weights.push(weight);
        }
    }
}

/// Gauss–Legendre nodes and weights mapped to `[a, b]`.
pub(crate) fn gauss_legendre(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(n.max(1)).expect("nonzero"));
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut pairs: Vec<(f64, f64)> =
        rule.as_node_weight_pairs().iter().map(|&(x, w)| (mid + half * x, half * w)).collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    pairs
}

pub(crate) fn uniform_angles(n: usize, shift: f64) -> impl Iterator<Item = f64> {
    let h = 2.0 * PI / n as f64;
    (0..n).map(move |i| (i as f64 + shift) * h)
}

/// Periodic trapezoid rule on the outer curve and on every hole.
pub fn build_boundary_quadrature(spec: &DomainSpec, n_theta: usize) -> Result<BoundaryQuadrature, GeometryError> {
    if n_theta < 64 || !n_theta.is_multiple_of(2) {
        return Err(GeometryError::Resolution(format!("n_theta must be even and at least 64, got {n_theta}")));
    }
    let mut components = vec![outer_component(spec, n_theta)];
    components.extend(spec.holes().iter().enumerate().map(|(i, _)| hole_component(spec, i, n_theta)));
    Ok(BoundaryQuadrature { components })
}

pub(crate) fn outer_component(spec: &DomainSpec, n: usize) -> BoundaryComponent {
    let h = 2.0 * PI / n as f64;
    let params: Vec<f64> = uniform_angles(n, 0.0).collect();
    let frames: Vec<_> = params.iter().map(|&t| spec.frame(t)).collect();
    BoundaryComponent {
        component: Component::Outer,
        nodes: frames.iter().map(|f| f.point).collect(),
        normals: frames.iter().map(|f| f.normal()).collect(),
        weights: frames.iter().map(|f| f.speed() * h).collect(),
        params,
    }
}

pub(crate) fn hole_component(spec: &DomainSpec, index: usize, n: usize) -> BoundaryComponent {
    let hole = spec.holes()[index];
    let params: Vec<f64> = uniform_angles(n, 0.0).collect();
    BoundaryComponent {
        component: Component::Hole(index),
        nodes: params.iter().map(|&t| hole.point(t)).collect(),
        normals: params.iter().map(|&t| hole.normal(t)).collect(),
        weights: vec![hole.radius * 2.0 * PI / n as f64; n],
        params,
    }
}

/// Relative area tolerance enforced by [`build_area_quadrature`].
pub const AREA_TOLERANCE: f64 = 1e-6;

/// Parameter intervals `[t0, t1]` of the ray `t·dir`, `0 < t < reach`, lying outside every hole.
fn free_segments(spec: &DomainSpec, dir: Point, reach: f64) -> Vec<(f64, f64)> {
    let mut blocked: Vec<(f64, f64)> = spec
        .holes()
        .iter()
        .filter_map(|h| {
            let b = dir.dot(&h.center);
            let disc = b * b - (h.center.norm_squared() - h.radius * h.radius);
            if disc <= 0.0 {
                return None;
            }
            let root = disc.sqrt();
            let (lo, hi) = (b - root, b + root);
            (hi > 0.0).then_some((lo.max(0.0), hi))
        })
        .collect();
    blocked.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut free = Vec::with_capacity(blocked.len() + 1);
    let mut start = 0.0;
    for (lo, hi) in blocked {
        if lo > start {
            free.push((start, lo));
        }
        start = start.max(hi);
    }
    if reach > start {
        free.push((start, reach));
    }
    free
}

/// Directions from the origin tangent to a hole that does not contain the origin.
fn tangent_angles(spec: &DomainSpec) -> Vec<f64> {
    let mut angles: Vec<f64> = spec
        .holes()
        .iter()
        .filter(|h| h.center.norm() > h.radius)
        .flat_map(|h| {
            let phi = h.center.y.atan2(h.center.x);
            let spread = (h.radius / h.center.norm()).asin();
            [(phi - spread).rem_euclid(2.0 * PI), (phi + spread).rem_euclid(2.0 * PI)]
        })
        .collect();
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    angles
}

/// Angular nodes and weights: periodic trapezoid without breakpoints, otherwise
/// Gauss rules on each arc between breakpoints under `θ = a + (b − a)(3τ² − 2τ³)`,
/// which smooths the square-root behaviour at tangent directions.
fn angular_rule(breaks: &[f64], n_theta: usize) -> Vec<(f64, f64)> {
    if breaks.is_empty() {
        let h = 2.0 * PI / n_theta as f64;
        return uniform_angles(n_theta, 0.5).map(|t| (t, h)).collect();
    }
    let mut rule = Vec::new();
    for (i, &a) in breaks.iter().enumerate() {
        let b = if i + 1 < breaks.len() { breaks[i + 1] } else { breaks[0] + 2.0 * PI };
        let len = b - a;
        let m = ((n_theta as f64 * len / (2.0 * PI)).ceil() as usize).max(12);
        for (tau, w) in gauss_legendre(m, 0.0, 1.0) {
            let theta = a + len * tau * tau * (3.0 - 2.0 * tau);
            rule.push((theta, w * len * 6.0 * tau * (1.0 - tau)));
        }
    }
    rule
}

/// Polar rule about the origin over the region.
///
/// Each ray is clipped exactly against the circular holes and integrated with
/// Gauss–Legendre on every free segment; the angular rule is split at the
/// directions tangent to holes so that every piece is smooth.
pub fn build_area_quadrature(spec: &DomainSpec, n_r: usize, n_theta: usize) -> Result<AreaQuadrature, GeometryError> {
    if n_r < 4 || n_theta < 16 {
        return Err(GeometryError::Resolution(format!("area grid {n_r}x{n_theta} is too coarse")));
    }
    let angular = angular_rule(&tangent_angles(spec), n_theta);
    let unit = gauss_legendre(n_r, 0.0, 1.0);
    let rays: Vec<AreaQuadrature> = angular
        .par_iter()
        .map(|&(theta, w_theta)| {
            let mut part = AreaQuadrature::default();
            let dir = Point::new(theta.cos(), theta.sin());
            for (t0, t1) in free_segments(spec, dir, spec.radius(theta)) {
                let len = t1 - t0;
                for &(s, ws) in &unit {
                    let t = t0 + len * s;
                    part.push(t * dir, w_theta * ws * len * t);
                }
            }
            part
        })
        .collect();
    let mut quad = AreaQuadrature::default();
    for part in rays {
        quad.nodes.extend(part.nodes);
        quad.weights.extend(part.weights);
    }
    let exact = spec.region_area();
    let achieved = ((quad.total() - exact) / exact).abs();
    if !(achieved <= AREA_TOLERANCE) {
        return Err(GeometryError::AreaTolerance { achieved, tolerance: AREA_TOLERANCE });
    }
    Ok(quad)
}

/// Resolution of the boundary and area rules used by an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureResolution {
    pub n_theta: usize,
    pub n_r: usize,
}

impl QuadratureResolution {
    pub fn new(n_theta: usize, n_r: usize) -> Self {
        Self { n_theta, n_r }
    }

    pub fn doubled(&self) -> Self {
        Self { n_theta: 2 * self.n_theta, n_r: 2 * self.n_r }
    }
}

impl Default for QuadratureResolution {
    fn default() -> Self {
        Self { n_theta: 256, n_r: 48 }
    }
}

/// Boundary and area rules built together for one domain.
#[derive(Debug, Clone)]
pub struct Quadratures {
    pub boundary: BoundaryQuadrature,
    pub area: AreaQuadrature,
}

impl Quadratures {
    pub fn build(spec: &DomainSpec, resolution: QuadratureResolution) -> Result<Self, GeometryError> {
        Ok(Self {
            boundary: build_boundary_quadrature(spec, resolution.n_theta)?,
            area: build_area_quadrature(spec, resolution.n_r, resolution.n_theta)?,
        })
    }
}
