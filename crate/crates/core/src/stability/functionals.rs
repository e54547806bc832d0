use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::{
    star_shaped_about, symmetric_difference_ratio, BoundaryComponent, DomainSpec, GeometryError, Quadratures,
    TubularSets,
};
use crate::solver::Field;
use crate::Point;

const N: f64 = crate::DIM as f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenterFormula {
    /// Region moment corrected by the hole traces of `u`.
    Barycentric,
    /// Collar moment corrected by the trace of `u` on the inner parallel curve.
    Tubular,
}

/// Center of the comparison ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CenterPoint {
    pub point: Point,
    pub formula: CenterFormula,
    /// Whether the point lies inside the outer curve.
    pub inside: bool,
}

/// `z = (∫ x dx − N ∫_{∂ω} u ν dS) / |Ω ∖ ω̄|`.
pub fn compute_z(spec: &DomainSpec, field: &dyn Field, quads: &Quadratures) -> CenterPoint {
    let moment = quads.area.integrate_vector(|x| x);
    let trace: Point = quads.boundary.holes().map(|c| c.integrate_vector(|x, nu| field.value(x) * nu)).sum();
    let point = (moment - N * trace) / quads.area.total();
    CenterPoint { point, formula: CenterFormula::Barycentric, inside: spec.inside_outer(point) }
}

/// The same construction over the collar of width `r_i` and its inner edge.
pub fn compute_z_tubular(spec: &DomainSpec, field: &dyn Field, tube: &TubularSets) -> CenterPoint {
    let moment = tube.area.integrate_vector(|x| x);
    let trace = tube.inner.integrate_vector(|x, nu| field.value(x) * nu);
    let point = (moment - N * trace) / tube.area.total();
    CenterPoint { point, formula: CenterFormula::Tubular, inside: spec.inside_outer(point) }
}

/// `∫_Γ (|x − z|/N − c)² dS`.
pub fn pseudo_distance(outer: &BoundaryComponent, z: Point, c: f64) -> f64 {
    outer.integrate(|x, _| ((x - z).norm() / N - c).powi(2))
}

/// `|Ω Δ B_{Nc}(z)| / |B_{Nc}(z)|` for the full outer domain.
pub fn asymmetry(spec: &DomainSpec, z: Point, c: f64) -> Result<f64, GeometryError> {
    symmetric_difference_ratio(spec, z, N * c)
}

/// Explicit `C` with `asymmetry ≤ C·√pseudo_distance`, available when the outer curve is
/// star-shaped about `z`.
///
/// With `R = Nc` and the polar radius `ρ(φ)` about `z`,
/// `|Ω Δ B| = ½∫|ρ² − R²| dφ ≤ ½(ρ_e + R)√(2π) (∫(ρ − R)² dφ)^{1/2}` and `dS ≥ ρ_i dφ`.
pub fn asymmetry_lemma_constant(spec: &DomainSpec, z: Point, c: f64, rho_e: f64, rho_i: f64) -> Option<f64> {
    if !star_shaped_about(spec, z) || !(rho_i > 0.0) || !(c > 0.0) {
        return None;
    }
    let radius = N * c;
    Some(N * (2.0 * PI).sqrt() * (rho_e + radius) / (2.0 * PI * radius * radius * rho_i.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{
        build_boundary_quadrature, interior_sphere_radius, rho_e_rho_i, tubular_sets, FourierMode, Hole,
        QuadratureResolution,
    };
    use crate::solver::radial_reference;
    use approx::assert_relative_eq;

    fn annulus() -> DomainSpec {
        DomainSpec::new(1.0, vec![], vec![Hole::new(Point::zeros(), 0.2, -0.24)]).unwrap()
    }

    #[test]
    fn radial_centers_vanish() {
        let spec = annulus();
        let quads = Quadratures::build(&spec, QuadratureResolution::new(128, 24)).unwrap();
        let u = radial_reference(1.0, 2);
        let z = compute_z(&spec, &u, &quads);
        assert!(z.point.norm() <= 1e-9 && z.inside);
        let ri = interior_sphere_radius(&spec).unwrap();
        let tube = tubular_sets(&spec, ri, ri, 16, 256).unwrap();
        assert!(compute_z_tubular(&spec, &u, &tube).point.norm() <= 1e-9);
    }

    #[test]
    fn tube_away_from_hole_sees_ball() {
        let spec = DomainSpec::new(1.0, vec![], vec![Hole::new(Point::new(0.5, 0.0), 0.1, -0.2)]).unwrap();
        let ri = interior_sphere_radius(&spec).unwrap();
        let tube = tubular_sets(&spec, ri, ri, 16, 256).unwrap();
        let z = compute_z_tubular(&spec, &radial_reference(1.0, 2), &tube);
        assert!(z.point.norm() <= 1e-6);
    }

    #[test]
    fn pseudo_distance_examples() {
        let disk = DomainSpec::disk(1.0).unwrap();
        let outer = build_boundary_quadrature(&disk, 256).unwrap().components.remove(0);
        assert!(pseudo_distance(&outer, Point::zeros(), 0.5).abs() <= 1e-12);
        let shifted = pseudo_distance(&outer, Point::new(0.1, 0.0), 0.5);
        assert!((shifted - PI * 0.01 / 4.0).abs() <= 2e-4, "{shifted}");
    }

    #[test]
    fn asymmetry_of_shifted_disk() {
        let disk = DomainSpec::disk(1.0).unwrap();
        let a = asymmetry(&disk, Point::new(0.2, 0.0), 0.5).unwrap();
        let d: f64 = 0.2;
        let lens = 2.0 * (d / 2.0).acos() - (d / 2.0) * (4.0 - d * d).sqrt();
        assert!((a - (2.0 * PI - 2.0 * lens) / PI).abs() <= 1e-6);
    }

    #[test]
    fn lemma_constant_dominates_on_perturbed_domain() {
        let spec = DomainSpec::new(1.0, vec![FourierMode::cosine(3, 0.05)], vec![]).unwrap();
        let outer = build_boundary_quadrature(&spec, 256).unwrap().components.remove(0);
        for z in [Point::zeros(), Point::new(0.05, -0.03)] {
            let c = 0.49;
            let (re, ri) = rho_e_rho_i(&spec, z).unwrap();
            let k = asymmetry_lemma_constant(&spec, z, c, re, ri).unwrap();
            let a = asymmetry(&spec, z, c).unwrap();
            assert!(a <= k * pseudo_distance(&outer, z, c).sqrt());
        }
        assert_relative_eq!(
            asymmetry_lemma_constant(&DomainSpec::disk(1.0).unwrap(), Point::zeros(), 0.5, 1.0, 1.0).unwrap(),
            2.0 * (2.0 * PI).sqrt() * 2.0 / (2.0 * PI),
            epsilon = 1e-14
        );
    }
}
