use std::f64::consts::PI;

use super::quadrature::{gauss_legendre, uniform_angles, AreaQuadrature, BoundaryComponent, Component};
use super::{DomainSpec, GeometryError};

/// The collar of points within distance `σ` of the outer curve and its inner edge.
#[derive(Debug, Clone)]
pub struct TubularSets {
    pub width: f64,
    pub area: AreaQuadrature,
    /// Inner parallel curve with normals pointing out of the collar (toward the interior of Ω).
    pub inner: BoundaryComponent,
}

/// Builds the collar in normal coordinates `x(θ) − tν(θ)`, `0 < t < σ`.
///
/// `interior_radius` must be the value returned by
/// [`interior_sphere_radius`](super::interior_sphere_radius); it also bounds the
/// curvature radius, so the normal coordinates are injective.
pub fn tubular_sets(
    spec: &DomainSpec,
    width: f64,
    interior_radius: f64,
    n_t: usize,
    n_theta: usize,
) -> Result<TubularSets, GeometryError> {
    if !(width > 0.0) || width > interior_radius * (1.0 + 1e-12) {
        return Err(GeometryError::TubeTooWide { width, interior_radius });
    }
    let dtheta = 2.0 * PI / n_theta as f64;
    let radial = gauss_legendre(n_t, 0.0, width);
    let mut area = AreaQuadrature::default();
    let mut inner = BoundaryComponent {
        component: Component::Parallel,
        params: Vec::with_capacity(n_theta),
        nodes: Vec::with_capacity(n_theta),
        normals: Vec::with_capacity(n_theta),
        weights: Vec::with_capacity(n_theta),
    };
    for theta in uniform_angles(n_theta, 0.0) {
        let f = spec.frame(theta);
        let nu = f.normal();
        let speed = f.speed();
        let kappa = f.curvature();
        for &(t, wt) in &radial {
            area.nodes.push(f.point - t * nu);
            area.weights.push(wt * dtheta * speed * (1.0 - t * kappa));
        }
        inner.params.push(theta);
        inner.nodes.push(f.point - width * nu);
        inner.normals.push(-nu);
        inner.weights.push(dtheta * speed * (1.0 - width * kappa));
    }
    Ok(TubularSets { width, area, inner })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{interior_sphere_radius, FourierMode, Point};
    use approx::assert_relative_eq;

    #[test]
    fn disk_collar_is_an_annulus() {
        let disk = DomainSpec::disk(1.0).unwrap();
        let tube = tubular_sets(&disk, 0.3, 1.0, 8, 128).unwrap();
        assert_relative_eq!(tube.area.total(), PI * (1.0 - 0.49), max_relative = 1e-12);
        assert_relative_eq!(tube.inner.length(), 2.0 * PI * 0.7, epsilon = 1e-12);
        assert!(tubular_sets(&disk, 1.1, 1.0, 8, 128).is_err());
    }

    #[test]
    fn collar_area_follows_steiner_formula() {
        let spec = DomainSpec::new(1.0, vec![FourierMode::cosine(3, 0.05)], vec![]).unwrap();
        let ri = interior_sphere_radius(&spec).unwrap();
        let tube = tubular_sets(&spec, ri, ri, 8, 256).unwrap();
        let perimeter = crate::geometry::build_boundary_quadrature(&spec, 256).unwrap().outer().length();
        assert_relative_eq!(tube.area.total(), ri * perimeter - PI * ri * ri, max_relative = 1e-10);
        let centroid = tube.area.integrate_vector(|x| x);
        assert!(centroid.norm() < 1e-12);
        assert!(tube.inner.nodes.iter().all(|p: &Point| spec.inside_outer(*p)));
    }
}
