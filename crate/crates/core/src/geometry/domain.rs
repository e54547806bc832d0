use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{GeometryError, Point};

/// Number of angles used when a property of the outer curve is checked by sampling.
pub(crate) const DENSE_SAMPLES: usize = 4096;

/// Clearance (relative to the outer radius) required between holes and other boundaries.
const MIN_CLEARANCE: f64 = 1e-6;

/// One Fourier term `cos·cos(kθ) + sin·sin(kθ)` of the relative radius perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierMode {
    pub k: u32,
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

impl FourierMode {
    pub fn cosine(k: u32, amplitude: f64) -> Self {
        Self { k, cos: amplitude, sin: 0.0 }
    }

    pub fn sine(k: u32, amplitude: f64) -> Self {
        Self { k, cos: 0.0, sin: amplitude }
    }

    pub fn magnitude(&self) -> f64 {
        self.cos.hypot(self.sin)
    }
}

/// A circular hole carrying the boundary value prescribed on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hole {
    pub center: Point,
    pub radius: f64,
    pub dirichlet_value: f64,
}

impl Hole {
    pub fn new(center: Point, radius: f64, dirichlet_value: f64) -> Self {
        Self { center, radius, dirichlet_value }
    }

    pub fn point(&self, phi: f64) -> Point {
        self.center + self.radius * Point::new(phi.cos(), phi.sin())
    }

    /// Normal of the perforated region at the hole point of angle `phi` (points into the hole).
    pub fn normal(&self, phi: f64) -> Point {
        -Point::new(phi.cos(), phi.sin())
    }

    pub fn contains(&self, x: Point) -> bool {
        (x - self.center).norm() <= self.radius
    }

    pub fn perimeter(&self) -> f64 {
        2.0 * PI * self.radius
    }

    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }
}

/// Local description of the outer curve at one parameter value.
#[derive(Debug, Clone, Copy)]
pub struct CurveFrame {
    pub point: Point,
    /// Derivative of the point with respect to the angle.
    pub tangent: Point,
    pub second: Point,
}

impl CurveFrame {
    pub fn speed(&self) -> f64 {
        self.tangent.norm()
    }

    /// Outward unit normal.
    pub fn normal(&self) -> Point {
        let s = self.speed();
        Point::new(self.tangent.y / s, -self.tangent.x / s)
    }

    /// Signed curvature, positive where the domain is locally convex.
    pub fn curvature(&self) -> f64 {
        let cross = self.tangent.x * self.second.y - self.tangent.y * self.second.x;
        cross / self.speed().powi(3)
    }
}

/// A star-shaped outer curve `r(θ) = R(1 + Σ modes)` around the origin minus disjoint circular holes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDomain", into = "RawDomain")]
pub struct DomainSpec {
    outer_radius: f64,
    modes: Vec<FourierMode>,
    holes: Vec<Hole>,
}

#[derive(Serialize, Deserialize)]
struct RawDomain {
    outer_radius: f64,
    #[serde(default)]
    modes: Vec<FourierMode>,
    #[serde(default)]
    holes: Vec<Hole>,
}

impl TryFrom<RawDomain> for DomainSpec {
    type Error = GeometryError;

    fn try_from(raw: RawDomain) -> Result<Self, Self::Error> {
        DomainSpec::new(raw.outer_radius, raw.modes, raw.holes)
    }
}

impl From<DomainSpec> for RawDomain {
    fn from(spec: DomainSpec) -> Self {
        RawDomain { outer_radius: spec.outer_radius, modes: spec.modes, holes: spec.holes }
    }
}

fn invalid(invariant: &'static str, detail: impl Into<String>) -> GeometryError {
    GeometryError::InvalidDomain { invariant, detail: detail.into() }
}

impl DomainSpec {
    pub fn new(outer_radius: f64, modes: Vec<FourierMode>, holes: Vec<Hole>) -> Result<Self, GeometryError> {
        let spec = Self { outer_radius, modes, holes };
        spec.validate()?;
        Ok(spec)
    }

    pub fn disk(radius: f64) -> Result<Self, GeometryError> {
        Self::new(radius, Vec::new(), Vec::new())
    }

    pub fn outer_radius(&self) -> f64 {
        self.outer_radius
    }

    pub fn modes(&self) -> &[FourierMode] {
        &self.modes
    }

    pub fn holes(&self) -> &[Hole] {
        &self.holes
    }

    pub fn with_holes(&self, holes: Vec<Hole>) -> Result<Self, GeometryError> {
        Self::new(self.outer_radius, self.modes.clone(), holes)
    }

    pub fn without_holes(&self) -> Self {
        Self { outer_radius: self.outer_radius, modes: self.modes.clone(), holes: Vec::new() }
    }

    fn validate(&self) -> Result<(), GeometryError> {
        let r0 = self.outer_radius;
        if !(r0.is_finite() && r0 > 0.0) {
            return Err(invalid("outer radius is positive", format!("outer_radius = {r0}")));
        }
        let mut seen = Vec::with_capacity(self.modes.len());
        let mut smoothness = 0.0;
        for m in &self.modes {
            if m.k == 0 {
                return Err(invalid("mode wavenumbers are at least 1", "k = 0"));
            }
            if !(m.cos.is_finite() && m.sin.is_finite()) {
                return Err(invalid("mode amplitudes are finite", format!("k = {}", m.k)));
            }
            if seen.contains(&m.k) {
                return Err(invalid("mode wavenumbers are distinct", format!("k = {} repeated", m.k)));
            }
            seen.push(m.k);
            smoothness += m.magnitude() * f64::from(m.k).powi(2);
        }
        if smoothness >= 1.0 {
            return Err(invalid("sum of |amplitude|·k² is below 1", format!("sum = {smoothness}")));
        }
        for i in 0..DENSE_SAMPLES {
            let theta = 2.0 * PI * i as f64 / DENSE_SAMPLES as f64;
            if self.radius(theta) <= 0.0 {
                return Err(invalid("r(θ) > 0", format!("r({theta}) <= 0")));
            }
        }
        let clearance = MIN_CLEARANCE * r0;
        for (i, h) in self.holes.iter().enumerate() {
            if !(h.radius.is_finite() && h.radius > 0.0) {
                return Err(invalid("hole radius is positive", format!("hole {i}: radius = {}", h.radius)));
            }
            if !(h.center.x.is_finite() && h.center.y.is_finite()) {
                return Err(invalid("hole center is finite", format!("hole {i}")));
            }
            if !(h.dirichlet_value <= 0.0) {
                return Err(invalid(
                    "hole boundary value is nonpositive",
                    format!("hole {i}: value = {}", h.dirichlet_value),
                ));
            }
            if !self.inside_outer(h.center) {
                return Err(invalid("hole lies strictly inside the outer curve", format!("hole {i}: center outside")));
            }
            let gap = self.sampled_distance_to_outer(h.center) - h.radius;
            if gap <= clearance {
                return Err(invalid(
                    "hole lies strictly inside the outer curve",
                    format!("hole {i}: clearance = {gap}"),
                ));
            }
            for (j, other) in self.holes.iter().enumerate().take(i) {
                let gap = (h.center - other.center).norm() - h.radius - other.radius;
                if gap <= clearance {
                    return Err(invalid(
                        "holes are pairwise disjoint",
                        format!("holes {j} and {i}: clearance = {gap}"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// `(r, r', r'')` at angle `theta`.
    pub fn radial_profile(&self, theta: f64) -> (f64, f64, f64) {
        let (mut f, mut df, mut ddf) = (1.0, 0.0, 0.0);
        for m in &self.modes {
            let k = f64::from(m.k);
            let (s, c) = (k * theta).sin_cos();
            f += m.cos * c + m.sin * s;
            df += k * (m.sin * c - m.cos * s);
            ddf -= k * k * (m.cos * c + m.sin * s);
        }
        let r0 = self.outer_radius;
        (r0 * f, r0 * df, r0 * ddf)
    }

    pub fn radius(&self, theta: f64) -> f64 {
        self.radial_profile(theta).0
    }

    pub fn frame(&self, theta: f64) -> CurveFrame {
        let (r, dr, ddr) = self.radial_profile(theta);
        let (s, c) = theta.sin_cos();
        let er = Point::new(c, s);
        let et = Point::new(-s, c);
        CurveFrame { point: r * er, tangent: dr * er + r * et, second: (ddr - r) * er + 2.0 * dr * et }
    }

    pub fn outer_point(&self, theta: f64) -> Point {
        let r = self.radius(theta);
        Point::new(r * theta.cos(), r * theta.sin())
    }

    /// Closed-form area enclosed by the outer curve.
    pub fn outer_area(&self) -> f64 {
        let energy: f64 = self.modes.iter().map(|m| m.cos * m.cos + m.sin * m.sin).sum();
        PI * self.outer_radius.powi(2) * (1.0 + 0.5 * energy)
    }

    pub fn holes_area(&self) -> f64 {
        self.holes.iter().map(Hole::area).sum()
    }

    /// Area of the perforated region.
    pub fn region_area(&self) -> f64 {
        self.outer_area() - self.holes_area()
    }

    pub fn holes_perimeter(&self) -> f64 {
        self.holes.iter().map(Hole::perimeter).sum()
    }

    /// Largest hole diameter, zero without holes.
    pub fn max_hole_diameter(&self) -> f64 {
        self.holes.iter().map(|h| 2.0 * h.radius).fold(0.0, f64::max)
    }

    pub fn inside_outer(&self, x: Point) -> bool {
        let rho = x.norm();
        rho == 0.0 || rho < self.radius(x.y.atan2(x.x))
    }

    /// Whether `x` lies in the open perforated region.
    pub fn contains(&self, x: Point) -> bool {
        self.inside_outer(x) && self.holes.iter().all(|h| (x - h.center).norm() > h.radius)
    }

    pub fn hole_index_containing(&self, x: Point) -> Option<usize> {
        self.holes.iter().position(|h| h.contains(x))
    }

    /// Distance to the outer curve from a fixed angular sampling (no refinement).
    pub(crate) fn sampled_distance_to_outer(&self, x: Point) -> f64 {
        (0..DENSE_SAMPLES)
            .map(|i| {
                let theta = 2.0 * PI * i as f64 / DENSE_SAMPLES as f64;
                (self.outer_point(theta) - x).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Maximum curvature of the outer curve over a dense sampling.
    pub fn max_curvature(&self) -> f64 {
        (0..DENSE_SAMPLES)
            .map(|i| self.frame(2.0 * PI * i as f64 / DENSE_SAMPLES as f64).curvature())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs_curvature(&self) -> f64 {
        (0..DENSE_SAMPLES)
            .map(|i| self.frame(2.0 * PI * i as f64 / DENSE_SAMPLES as f64).curvature().abs())
            .fold(0.0, f64::max)
    }

    /// Rotates the whole configuration by `angle` about the origin.
    pub fn rotated(&self, angle: f64) -> Self {
        let modes = self
            .modes
            .iter()
            .map(|m| {
                let (s, c) = (f64::from(m.k) * angle).sin_cos();
                FourierMode { k: m.k, cos: m.cos * c - m.sin * s, sin: m.sin * c + m.cos * s }
            })
            .collect();
        let rot = nalgebra::Rotation2::new(angle);
        let holes = self.holes.iter().map(|h| Hole { center: rot * h.center, ..*h }).collect();
        Self { outer_radius: self.outer_radius, modes, holes }
    }
}
