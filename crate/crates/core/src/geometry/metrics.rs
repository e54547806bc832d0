use std::f64::consts::PI;

use rayon::prelude::*;

use super::quadrature::{gauss_legendre, hole_component, outer_component, uniform_angles};
use super::{DomainSpec, GeometryError, Point};
use crate::numeric::{bisect, golden_max, golden_min};

const PROJECTION_SEEDS: usize = 720;

/// Closest point of the outer curve to a given point.
#[derive(Debug, Clone, Copy)]
pub struct OuterProjection {
    pub theta: f64,
    pub distance: f64,
}

/// Damped Newton projection onto the outer curve, seeded from the nearest of 720 samples.
pub fn project_to_outer(spec: &DomainSpec, x: Point) -> OuterProjection {
    let h = 2.0 * PI / PROJECTION_SEEDS as f64;
    let objective = |t: f64| 0.5 * (spec.outer_point(t) - x).norm_squared();
    let mut theta = (0..PROJECTION_SEEDS)
        .map(|i| i as f64 * h)
        .min_by(|a, b| objective(*a).total_cmp(&objective(*b)))
        .expect("nonempty seed set");
    let mut value = objective(theta);
    for _ in 0..60 {
        let f = spec.frame(theta);
        let diff = f.point - x;
        let g = diff.dot(&f.tangent);
        let curv = f.tangent.norm_squared() + diff.dot(&f.second);
        let mut step = if curv > 0.0 { -g / curv } else { -g / f.tangent.norm_squared() };
        step = step.clamp(-h, h);
        let mut accepted = false;
        for _ in 0..40 {
            let trial = objective(theta + step);
            if trial <= value {
                theta += step;
                value = trial;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted || step.abs() < 1e-15 {
            break;
        }
    }
    OuterProjection { theta: theta.rem_euclid(2.0 * PI), distance: (2.0 * value).sqrt() }
}

/// Distance to the nearest boundary component without a membership check.
pub(crate) fn boundary_distance(spec: &DomainSpec, x: Point) -> f64 {
    spec.holes().iter().map(|h| (x - h.center).norm() - h.radius).fold(project_to_outer(spec, x).distance, f64::min)
}

/// Distance from an interior point to the boundary of the perforated region.
pub fn delta(spec: &DomainSpec, x: Point) -> Result<f64, GeometryError> {
    if !spec.contains(x) {
        return Err(GeometryError::ExteriorPoint { x: x.x, y: x.y });
    }
    Ok(boundary_distance(spec, x))
}

fn tangent_ball_fits(spec: &DomainSpec, p: Point, normal: Point, r: f64) -> bool {
    let center = p - r * normal;
    spec.contains(center) && boundary_distance(spec, center) >= r * (1.0 - 1e-12)
}

/// Lower bound on the radius of the uniform interior sphere condition.
pub fn interior_sphere_radius(spec: &DomainSpec) -> Result<f64, GeometryError> {
    let kappa = spec.max_abs_curvature();
    let diameter = diameter(spec);
    let outer_cap = if kappa > 0.0 { (1.0 / kappa).min(0.5 * diameter) } else { 0.5 * diameter };
    let mut probes = Vec::new();
    let outer = outer_component(spec, 512);
    probes.extend(outer.nodes.iter().zip(&outer.normals).map(|(p, n)| (*p, *n, outer_cap)));
    for i in 0..spec.holes().len() {
        let hole = hole_component(spec, i, 256);
        probes.extend(hole.nodes.iter().zip(&hole.normals).map(|(p, n)| (*p, *n, 0.5 * diameter)));
    }
    let radius = probes
        .par_iter()
        .map(|&(p, n, cap)| {
            if tangent_ball_fits(spec, p, n, cap) {
                return cap;
            }
            let (mut lo, mut hi) = (0.0, cap);
            while hi - lo > 1e-9 {
                let mid = 0.5 * (lo + hi);
                if tangent_ball_fits(spec, p, n, mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        })
        .reduce(|| f64::INFINITY, f64::min);
    if radius <= 1e-6 {
        return Err(GeometryError::NoInteriorSphere { radius });
    }
    Ok(radius)
}

fn chord(spec: &DomainSpec, a: f64, b: f64) -> f64 {
    (spec.outer_point(a) - spec.outer_point(b)).norm()
}

fn refined_diameter(spec: &DomainSpec, n: usize) -> f64 {
    let pts: Vec<Point> = uniform_angles(n, 0.0).map(|t| spec.outer_point(t)).collect();
    let (mut ia, mut ib, mut best) = (0, 0, 0.0);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (pts[i] - pts[j]).norm();
            if d > best {
                (ia, ib, best) = (i, j, d);
            }
        }
    }
    let h = 2.0 * PI / n as f64;
    let (mut a, mut b) = (ia as f64 * h, ib as f64 * h);
    for _ in 0..8 {
        a = golden_max(|t| chord(spec, t, b), a - h, a + h, 1e-13).0;
        b = golden_max(|t| chord(spec, a, t), b - h, b + h, 1e-13).0;
    }
    chord(spec, a, b).max(best)
}

/// Diameter of the domain, attained on the outer curve.
pub fn diameter(spec: &DomainSpec) -> f64 {
    let mut n = 256;
    let mut current = refined_diameter(spec, n);
    loop {
        n *= 2;
        let next = refined_diameter(spec, n);
        let change = (next - current).abs();
        current = current.max(next);
        if change < 1e-9 || n >= 4096 {
            return current;
        }
    }
}

/// Largest and smallest distance from `z` to the outer curve.
pub fn rho_e_rho_i(spec: &DomainSpec, z: Point) -> Result<(f64, f64), GeometryError> {
    if !spec.inside_outer(z) {
        return Err(GeometryError::CenterOutside { x: z.x, y: z.y });
    }
    let n = 4096;
    let h = 2.0 * PI / n as f64;
    let dist = |t: f64| (spec.outer_point(t) - z).norm();
    let samples: Vec<f64> = (0..n).map(|i| dist(i as f64 * h)).collect();
    let imax = (0..n).max_by(|&a, &b| samples[a].total_cmp(&samples[b])).expect("samples");
    let imin = (0..n).min_by(|&a, &b| samples[a].total_cmp(&samples[b])).expect("samples");
    let tmax = imax as f64 * h;
    let tmin = imin as f64 * h;
    let rho_e = golden_max(dist, tmax - h, tmax + h, 1e-12).1.max(samples[imax]);
    let rho_i = golden_min(dist, tmin - h, tmin + h, 1e-12).1.min(samples[imin]);
    Ok((rho_e, rho_i))
}

/// `|Ω Δ B_radius(z)| / |B_radius(z)|` for the full outer domain (holes ignored).
pub fn symmetric_difference_ratio(spec: &DomainSpec, z: Point, radius: f64) -> Result<f64, GeometryError> {
    if !(radius > 0.0) {
        return Err(GeometryError::Resolution(format!("ball radius must be positive, got {radius}")));
    }
    let ball = PI * radius * radius;
    let area = if star_shaped_about(spec, z) {
        radial_symmetric_difference(spec, z, radius)
    } else {
        quadtree_symmetric_difference(spec, z, radius)
    };
    Ok(area / ball)
}

pub(crate) fn star_shaped_about(spec: &DomainSpec, z: Point) -> bool {
    spec.inside_outer(z)
        && uniform_angles(4096, 0.0).all(|t| {
            let f = spec.frame(t);
            (f.point - z).dot(&f.normal()) > 1e-9
        })
}

/// Integrates `½|ρ² − R²|` in the polar angle about `z`, split at the crossings `ρ = R`.
fn radial_symmetric_difference(spec: &DomainSpec, z: Point, radius: f64) -> f64 {
    let gap = |t: f64| (spec.outer_point(t) - z).norm() - radius;
    let integrand = |t: f64| {
        let f = spec.frame(t);
        let d = f.point - z;
        let rho2 = d.norm_squared();
        let dphi = (d.x * f.tangent.y - d.y * f.tangent.x) / rho2;
        0.5 * (rho2 - radius * radius).abs() * dphi
    };
    let n = 2048;
    let h = 2.0 * PI / n as f64;
    let mut breaks = Vec::new();
    for i in 0..n {
        let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
        let (ga, gb) = (gap(a), gap(b));
        if ga == 0.0 {
            breaks.push(a);
        } else if ga * gb < 0.0 {
            breaks.push(bisect(gap, a, b, 1e-15));
        }
    }
    let mut pieces: Vec<(f64, f64)> = Vec::new();
    if breaks.is_empty() {
        pieces.push((0.0, 2.0 * PI));
    } else {
        for w in breaks.windows(2) {
            pieces.push((w[0], w[1]));
        }
        pieces.push((*breaks.last().expect("nonempty"), breaks[0] + 2.0 * PI));
    }
    let rule = gauss_legendre(20, -1.0, 1.0);
    let max_len = 2.0 * PI / 256.0;
    pieces
        .iter()
        .map(|&(a, b)| {
            let m = ((b - a) / max_len).ceil().max(1.0) as usize;
            let step = (b - a) / m as f64;
            (0..m)
                .map(|j| {
                    let lo = a + j as f64 * step;
                    rule.iter().map(|&(x, w)| 0.5 * step * w * integrand(lo + 0.5 * step * (x + 1.0))).sum::<f64>()
                })
                .sum::<f64>()
        })
        .sum()
}

/// Adaptive indicator integration for centers that do not see the whole curve.
fn quadtree_symmetric_difference(spec: &DomainSpec, z: Point, radius: f64) -> f64 {
    let reach = (0..1024).map(|i| spec.outer_point(2.0 * PI * i as f64 / 1024.0).norm()).fold(0.0, f64::max) * 1.01;
    let lo = Point::new((-reach).min(z.x - radius), (-reach).min(z.y - radius));
    let hi = Point::new(reach.max(z.x + radius), reach.max(z.y + radius));
    let side = (hi.x - lo.x).max(hi.y - lo.y);
    let disagree = |p: Point| spec.inside_outer(p) != ((p - z).norm() < radius);
    fn cell<F: Fn(Point) -> bool + Sync>(f: &F, corner: Point, side: f64, depth: u32) -> f64 {
        let probes = [
            corner,
            corner + Point::new(side, 0.0),
            corner + Point::new(0.0, side),
            corner + Point::new(side, side),
            corner + Point::new(0.5 * side, 0.5 * side),
        ];
        let hits = probes.iter().filter(|p| f(**p)).count();
        if depth == 0 {
            return if f(probes[4]) { side * side } else { 0.0 };
        }
        if depth < 9 && (hits == 0 || hits == 5) {
            return if hits == 5 { side * side } else { 0.0 };
        }
        let half = 0.5 * side;
        let kids =
            [corner, corner + Point::new(half, 0.0), corner + Point::new(0.0, half), corner + Point::new(half, half)];
        let parts: Vec<f64> = kids.par_iter().map(|c| cell(f, *c, half, depth - 1)).collect();
        parts.iter().sum()
    }
    cell(&disagree, lo, side, 14)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{FourierMode, Hole};
    use approx::assert_relative_eq;

    fn annulus() -> DomainSpec {
        DomainSpec::new(1.0, vec![], vec![Hole::new(Point::zeros(), 0.2, 0.0)]).unwrap()
    }

    #[test]
    fn delta_examples() {
        assert_relative_eq!(delta(&annulus(), Point::new(0.6, 0.0)).unwrap(), 0.4, epsilon = 1e-12);
        assert_relative_eq!(delta(&DomainSpec::disk(1.0).unwrap(), Point::zeros()).unwrap(), 1.0, epsilon = 1e-12);
        assert!(matches!(delta(&annulus(), Point::new(0.1, 0.0)), Err(GeometryError::ExteriorPoint { .. })));
    }

    #[test]
    fn projection_beats_dense_sampling() {
        let spec = DomainSpec::new(1.0, vec![FourierMode::cosine(1, 0.05)], vec![]).unwrap();
        let x = Point::new(0.5, 0.0);
        let brute = (0..1_000_000)
            .map(|i| (spec.outer_point(2.0 * PI * i as f64 / 1e6) - x).norm())
            .fold(f64::INFINITY, f64::min);
        assert!((delta(&spec, x).unwrap() - brute).abs() <= 1e-8);
    }

    #[test]
    fn interior_sphere_examples() {
        assert!((interior_sphere_radius(&annulus()).unwrap() - 0.4).abs() <= 1e-6);
        assert!((interior_sphere_radius(&DomainSpec::disk(1.0).unwrap()).unwrap() - 1.0).abs() <= 1e-6);
        let shifted = DomainSpec::new(1.0, vec![], vec![Hole::new(Point::new(0.5, 0.0), 0.2, 0.0)]).unwrap();
        assert!((interior_sphere_radius(&shifted).unwrap() - 0.15).abs() <= 1e-6);
    }

    #[test]
    fn diameter_examples() {
        assert_relative_eq!(diameter(&DomainSpec::disk(1.0).unwrap()), 2.0, epsilon = 1e-12);
        assert_relative_eq!(diameter(&DomainSpec::disk(0.5).unwrap()), 1.0, epsilon = 1e-12);
        let ellipse = DomainSpec::new(1.0, vec![FourierMode::cosine(2, 0.1)], vec![]).unwrap();
        assert_relative_eq!(diameter(&ellipse), 2.2, epsilon = 1e-10);
    }

    #[test]
    fn rho_examples() {
        let disk = DomainSpec::disk(1.0).unwrap();
        let (e, i) = rho_e_rho_i(&disk, Point::new(0.1, 0.0)).unwrap();
        assert_relative_eq!(e, 1.1, epsilon = 1e-12);
        assert_relative_eq!(i, 0.9, epsilon = 1e-12);
        let tri = DomainSpec::new(1.0, vec![FourierMode::cosine(3, 0.05)], vec![]).unwrap();
        let (e, i) = rho_e_rho_i(&tri, Point::zeros()).unwrap();
        assert_relative_eq!(e, 1.05, epsilon = 1e-12);
        assert_relative_eq!(i, 0.95, epsilon = 1e-12);
        assert!(rho_e_rho_i(&disk, Point::new(2.0, 0.0)).is_err());
    }

    #[test]
    fn symmetric_difference_examples() {
        let disk = DomainSpec::disk(1.0).unwrap();
        assert!(symmetric_difference_ratio(&disk, Point::zeros(), 1.0).unwrap().abs() < 1e-6);
        let d: f64 = 0.2;
        let lens = 2.0 * (d / 2.0).acos() - (d / 2.0) * (4.0 - d * d).sqrt();
        let oracle = (2.0 * PI - 2.0 * lens) / PI;
        let got = symmetric_difference_ratio(&disk, Point::new(d, 0.0), 1.0).unwrap();
        assert_relative_eq!(got, oracle, max_relative = 1e-8);
        assert!((got - 0.254223).abs() < 1e-3);
        assert_relative_eq!(symmetric_difference_ratio(&disk, Point::zeros(), 0.5).unwrap(), 3.0, max_relative = 1e-10);
    }

    #[test]
    fn quadtree_fallback_agrees_with_lens_formula() {
        let disk = DomainSpec::disk(1.0).unwrap();
        let d: f64 = 1.5;
        let lens = 2.0 * (d / 2.0).acos() - (d / 2.0) * (4.0 - d * d).sqrt();
        let oracle = (2.0 * PI - 2.0 * lens) / PI;
        let got = symmetric_difference_ratio(&disk, Point::new(d, 0.0), 1.0).unwrap();
        assert_relative_eq!(got, oracle, max_relative = 1e-3);
    }
}
