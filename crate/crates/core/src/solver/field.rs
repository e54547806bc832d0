use std::f64::consts::PI;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::Point;

/// Value, gradient and Hessian of a scalar field at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldEval {
    pub value: f64,
    pub gradient: Point,
    pub hessian: Matrix2<f64>,
}

impl FieldEval {
    pub fn laplacian(&self) -> f64 {
        self.hessian.trace()
    }

    pub fn normal_derivative(&self, normal: Point) -> f64 {
        self.gradient.dot(&normal)
    }
}

/// A twice differentiable scalar field on the plane.
pub trait Field: Send + Sync {
    fn eval(&self, x: Point) -> FieldEval;

    fn value(&self, x: Point) -> f64 {
        self.eval(x).value
    }

    fn gradient(&self, x: Point) -> Point {
        self.eval(x).gradient
    }

    /// Points where the representation is singular.
    fn singular_points(&self) -> Vec<Point> {
        Vec::new()
    }
}

impl<F: Field + ?Sized> Field for &F {
    fn eval(&self, x: Point) -> FieldEval {
        (**self).eval(x)
    }

    fn singular_points(&self) -> Vec<Point> {
        (**self).singular_points()
    }
}

impl<F: Field + ?Sized> Field for Box<F> {
    fn eval(&self, x: Point) -> FieldEval {
        (**self).eval(x)
    }

    fn singular_points(&self) -> Vec<Point> {
        (**self).singular_points()
    }
}

/// `(1/2π) log|d|` with its gradient and Hessian.
pub(crate) fn log_kernel(d: Point) -> FieldEval {
    let r2 = d.norm_squared();
    let scale = 1.0 / (2.0 * PI);
    let outer = d * d.transpose();
    FieldEval {
        value: scale * 0.5 * r2.ln(),
        gradient: d * (scale / r2),
        hessian: (Matrix2::identity() * r2 - 2.0 * outer) * (scale / (r2 * r2)),
    }
}

/// Normal derivative of the log kernel, the only kernel quantity the solvers need besides its value.
pub(crate) fn log_kernel_flux(d: Point, normal: Point) -> f64 {
    d.dot(&normal) / (2.0 * PI * d.norm_squared())
}

/// Harmonic field built from logarithmic sources, harmonic polynomials and a constant.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HarmonicField {
    pub sources: Vec<Point>,
    pub coefficients: Vec<f64>,
    /// Terms `(m, a, b)` contributing `a·Re(zᵐ) + b·Im(zᵐ)`.
    pub polynomials: Vec<(u32, f64, f64)>,
    pub constant: f64,
}

impl HarmonicField {
    pub fn constant(value: f64) -> Self {
        Self { constant: value, ..Self::default() }
    }

    pub fn polynomial(m: u32, re: f64, im: f64) -> Self {
        Self { polynomials: vec![(m, re, im)], ..Self::default() }
    }
}

/// `a·Re(zᵐ) + b·Im(zᵐ)` with derivatives, using `f = (a − ib)zᵐ`.
fn harmonic_polynomial(x: Point, m: u32, a: f64, b: f64) -> FieldEval {
    let z = nalgebra::Complex::new(x.x, x.y);
    let coef = nalgebra::Complex::new(a, -b);
    let mf = f64::from(m);
    let value = (coef * z.powu(m)).re;
    let d1 = if m >= 1 { coef * mf * z.powu(m - 1) } else { nalgebra::Complex::new(0.0, 0.0) };
    let d2 = if m >= 2 { coef * mf * (mf - 1.0) * z.powu(m - 2) } else { nalgebra::Complex::new(0.0, 0.0) };
    // For harmonic Re f: ∇ = (Re f', −Im f'), Hessian = [[Re f'', −Im f''], [−Im f'', −Re f'']].
    FieldEval { value, gradient: Point::new(d1.re, -d1.im), hessian: Matrix2::new(d2.re, -d2.im, -d2.im, -d2.re) }
}

impl Field for HarmonicField {
    fn eval(&self, x: Point) -> FieldEval {
        let mut acc = FieldEval { value: self.constant, gradient: Point::zeros(), hessian: Matrix2::zeros() };
        for (s, a) in self.sources.iter().zip(&self.coefficients) {
            let k = log_kernel(x - s);
            acc.value += a * k.value;
            acc.gradient += *a * k.gradient;
            acc.hessian += *a * k.hessian;
        }
        for &(m, a, b) in &self.polynomials {
            let p = harmonic_polynomial(x, m, a, b);
            acc.value += p.value;
            acc.gradient += p.gradient;
            acc.hessian += p.hessian;
        }
        acc
    }

    fn singular_points(&self) -> Vec<Point> {
        self.sources.clone()
    }
}

/// Quadratic `|x − center|²/4` minus a field: harmonic when the field solves `Δu = 1`.
#[derive(Debug, Clone, Copy)]
pub struct QuadraticDeviation<F> {
    pub field: F,
    pub center: Point,
}

impl<F: Field> Field for QuadraticDeviation<F> {
    fn eval(&self, x: Point) -> FieldEval {
        let u = self.field.eval(x);
        let d = x - self.center;
        FieldEval {
            value: 0.25 * d.norm_squared() - u.value,
            gradient: 0.5 * d - u.gradient,
            hessian: Matrix2::identity() * 0.5 - u.hessian,
        }
    }

    fn singular_points(&self) -> Vec<Point> {
        self.field.singular_points()
    }
}
