use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use super::field::{log_kernel, Field, FieldEval, HarmonicField};
use crate::geometry::DomainSpec;
use crate::Point;

/// `u(x) = |x − anchor|²/4 + Σ a_j (1/2π) log|x − s_j| + constant`, so that `Δu ≡ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldModel {
    pub anchor: Point,
    pub sources: Vec<Point>,
    pub coefficients: Vec<f64>,
    pub constant: f64,
}

impl FieldModel {
    /// The model with every source coefficient and the constant set to zero.
    pub fn quadratic(anchor: Point) -> Self {
        Self { anchor, sources: Vec::new(), coefficients: Vec::new(), constant: 0.0 }
    }

    pub fn particular(&self, x: Point) -> FieldEval {
        let d = x - self.anchor;
        FieldEval { value: 0.25 * d.norm_squared(), gradient: 0.5 * d, hessian: Matrix2::identity() * 0.5 }
    }

    pub fn harmonic_part(&self) -> HarmonicField {
        HarmonicField {
            sources: self.sources.clone(),
            coefficients: self.coefficients.clone(),
            polynomials: Vec::new(),
            constant: self.constant,
        }
    }

    /// Largest coefficient magnitude, zero for the bare quadratic.
    pub fn max_coefficient(&self) -> f64 {
        self.coefficients.iter().map(|a| a.abs()).fold(self.constant.abs(), f64::max)
    }
}

impl Field for FieldModel {
    fn eval(&self, x: Point) -> FieldEval {
        let mut acc = self.particular(x);
        acc.value += self.constant;
        for (s, a) in self.sources.iter().zip(&self.coefficients) {
            let k = log_kernel(x - s);
            acc.value += a * k.value;
            acc.gradient += *a * k.gradient;
            acc.hessian += *a * k.hessian;
        }
        acc
    }

    fn singular_points(&self) -> Vec<Point> {
        self.sources.clone()
    }
}

/// Exact torsion function of the ball of radius `R` centered at the origin, `(|x|² − R²)/(2N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialReference {
    pub radius: f64,
    pub dimension: u32,
}

impl RadialReference {
    /// Constant normal derivative on the outer sphere, `R/N`.
    pub fn boundary_flux(&self) -> f64 {
        self.radius / f64::from(self.dimension)
    }
}

/// Closed-form radial torsion function.
pub fn radial_reference(radius: f64, dimension: u32) -> RadialReference {
    assert!(radius > 0.0 && dimension >= 2, "radial reference needs R > 0 and N ≥ 2");
    RadialReference { radius, dimension }
}

impl Field for RadialReference {
    fn eval(&self, x: Point) -> FieldEval {
        let n = f64::from(self.dimension);
        FieldEval {
            value: (x.norm_squared() - self.radius * self.radius) / (2.0 * n),
            gradient: x / n,
            hessian: Matrix2::identity() / n,
        }
    }
}

/// Singular points of `field` lying in the closed perforated region of `spec`.
pub fn singularities_in_region(field: &dyn Field, spec: &DomainSpec) -> Vec<Point> {
    field
        .singular_points()
        .into_iter()
        .filter(|p| spec.inside_outer(*p) && spec.holes().iter().all(|h| (p - h.center).norm() >= h.radius))
        .collect()
}
