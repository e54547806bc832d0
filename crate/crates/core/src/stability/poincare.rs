use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bounds::{poincare_bound, BoundInputs, PoincareBound};
use super::StabilityError;
use crate::geometry::{boundary_distance, DomainSpec, Quadratures};
use crate::solver::{Field, HarmonicField};
use crate::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExponentRegime {
    /// `1 ≤ p ≤ r ≤ Np/(N − p(1 − α))`, `p(1 − α) < N`, `0 ≤ α ≤ 1`.
    Sobolev,
    /// `r = p ≥ 1`, `α = 0`.
    Diagonal,
}

/// A validated exponent triple `(r, p, α)` for the weighted Poincaré inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoincareExponents {
    pub dimension: u32,
    pub r: f64,
    pub p: f64,
    pub alpha: f64,
    pub regime: ExponentRegime,
}

impl PoincareExponents {
    pub fn new(dimension: u32, r: f64, p: f64, alpha: f64) -> Result<Self, StabilityError> {
        if dimension < 2 {
            return Err(StabilityError::Dimension(dimension));
        }
        let n = f64::from(dimension);
        let sobolev_violation = if !(p >= 1.0) {
            Some("1 ≤ p")
        } else if !(r >= p) {
            Some("p ≤ r")
        } else if !(0.0..=1.0).contains(&alpha) {
            Some("0 ≤ α ≤ 1")
        } else if !(p * (1.0 - alpha) < n) {
            Some("p(1 − α) < N")
        } else if !(r <= n * p / (n - p * (1.0 - alpha)) * (1.0 + 1e-14)) {
            Some("r ≤ Np/(N − p(1 − α))")
        } else {
            None
        };
        let regime = match sobolev_violation {
            None => ExponentRegime::Sobolev,
            Some(_) if r == p && p >= 1.0 && alpha == 0.0 && p.is_finite() => ExponentRegime::Diagonal,
            Some(condition) => {
                return Err(StabilityError::InvalidExponents { n: dimension, r, p, alpha, condition });
            }
        };
        Ok(Self { dimension, r, p, alpha, regime })
    }
}

/// Random harmonic fields with logarithmic sources outside the outer curve and inside the holes.
pub fn random_harmonic_fields(spec: &DomainSpec, count: usize, seed: u64) -> Vec<HarmonicField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut field = HarmonicField::constant(rng.random_range(-1.0..1.0));
            for _ in 0..rng.random_range(1..=3) {
                let t = rng.random_range(0.0..2.0 * PI);
                let stretch = rng.random_range(1.2..2.0);
                field.sources.push(spec.outer_point(t) * stretch);
                field.coefficients.push(rng.random_range(-1.0..1.0));
            }
            for hole in spec.holes() {
                let t = rng.random_range(0.0..2.0 * PI);
                let s = rng.random_range(0.0..0.7) * hole.radius;
                field.sources.push(hole.center + s * Point::new(t.cos(), t.sin()));
                field.coefficients.push(rng.random_range(-0.2..0.2));
            }
            let m = rng.random_range(1..=3);
            field.polynomials.push((m, rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            field
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoincareReport {
    pub exponents: PoincareExponents,
    pub ratios: Vec<f64>,
    /// Largest observed `‖v − v_D‖_r / ‖δ^α ∇v‖_p`.
    pub max_ratio: f64,
    /// Closed-form bound with the unknown universal factor set to 1.
    pub bound: PoincareBound,
    pub normalized: bool,
}

/// Empirical weighted Poincaré ratios over a family of harmonic fields.
pub fn poincare_empirical(
    spec: &DomainSpec,
    quads: &Quadratures,
    fields: &[HarmonicField],
    exponents: PoincareExponents,
    interior_radius: f64,
    diameter: f64,
) -> PoincareReport {
    let area = &quads.area;
    let weights: Vec<f64> = area
        .nodes
        .par_iter()
        .map(|x| boundary_distance(spec, *x).max(0.0).powf(exponents.alpha * exponents.p))
        .collect();
    let PoincareExponents { r, p, .. } = exponents;
    let ratios: Vec<f64> = fields
        .par_iter()
        .map(|v| {
            let evals: Vec<_> = area.nodes.iter().map(|x| v.eval(*x)).collect();
            let total = area.total();
            let mean = evals.iter().zip(&area.weights).map(|(e, w)| w * e.value).sum::<f64>() / total;
            let num = evals.iter().zip(&area.weights).map(|(e, w)| w * (e.value - mean).abs().powf(r)).sum::<f64>();
            let den = evals
                .iter()
                .zip(&area.weights)
                .zip(&weights)
                .map(|((e, w), d)| w * d * e.gradient.norm().powf(p))
                .sum::<f64>();
            // A harmonic field with vanishing gradient is constant.
            if den > 0.0 {
                num.powf(1.0 / r) / den.powf(1.0 / p)
            } else {
                0.0
            }
        })
        .collect();
    let inputs = BoundInputs {
        dimension: exponents.dimension,
        interior_radius,
        diameter,
        region_area: area.total(),
        holes_perimeter: spec.holes_perimeter(),
        hole_c2_norm: 0.0,
        anchor_distance: interior_radius,
    };
    PoincareReport {
        exponents,
        max_ratio: ratios.iter().copied().fold(0.0, f64::max),
        ratios,
        bound: poincare_bound(&exponents, &inputs),
        normalized: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Hole, QuadratureResolution};

    #[test]
    fn exponent_validation() {
        assert_eq!(PoincareExponents::new(2, 2.0, 2.0, 0.5).unwrap().regime, ExponentRegime::Sobolev);
        assert_eq!(PoincareExponents::new(2, 3.0, 3.0, 0.0).unwrap().regime, ExponentRegime::Diagonal);
        match PoincareExponents::new(2, 4.0, 2.0, 0.0) {
            Err(StabilityError::InvalidExponents { condition, .. }) => assert_eq!(condition, "p(1 − α) < N"),
            other => panic!("{other:?}"),
        }
        assert!(PoincareExponents::new(2, 1.0, 2.0, 0.5).is_err());
        assert!(PoincareExponents::new(2, 5.0, 2.0, 0.5).is_err());
    }

    #[test]
    fn constant_field_ratio_is_zero() {
        let spec = DomainSpec::new(1.0, vec![], vec![Hole::new(Point::new(0.3, 0.0), 0.15, -0.1)]).unwrap();
        let quads = Quadratures::build(&spec, QuadratureResolution::new(64, 8)).unwrap();
        let e = PoincareExponents::new(2, 2.0, 2.0, 0.5).unwrap();
        let rep = poincare_empirical(&spec, &quads, &[HarmonicField::constant(2.0)], e, 0.2, 2.0);
        assert_eq!(rep.max_ratio, 0.0);
        assert!(rep.normalized && rep.bound.mean_normalized > 0.0);
    }

    #[test]
    fn random_family_is_reproducible_and_regular() {
        let spec = DomainSpec::new(1.0, vec![], vec![Hole::new(Point::new(0.3, 0.0), 0.15, -0.1)]).unwrap();
        let a = random_harmonic_fields(&spec, 10, 3);
        assert_eq!(a, random_harmonic_fields(&spec, 10, 3));
        for f in &a {
            assert!(crate::solver::singularities_in_region(f, &spec).is_empty());
        }
    }
}
