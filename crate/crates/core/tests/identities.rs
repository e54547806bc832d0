use std::f64::consts::PI;

use approx::assert_relative_eq;
use proptest::prelude::*;
use torsion_lab::geometry::{DomainSpec, FourierMode, Hole, QuadratureResolution, Quadratures};
use torsion_lab::identities::{
    check_fundamental, check_overdetermined, check_pohozaev, compute_c, cs_deficit, deviation_hessian_norm, p_function,
    IdentityError, OVERDETERMINATION_TOLERANCE,
};
use torsion_lab::solver::{radial_reference, solve_cauchy, solve_dirichlet, CauchyOptions, Field};
use torsion_lab::stability::{compute_z, random_interior_points};
use torsion_lab::Point;

fn annulus(rho: f64) -> DomainSpec {
    DomainSpec::new(1.0, vec![], vec![Hole::new(Point::zeros(), rho, (rho * rho - 1.0) / 4.0)]).unwrap()
}

fn quads(spec: &DomainSpec, n_theta: usize, n_r: usize) -> Quadratures {
    Quadratures::build(spec, QuadratureResolution::new(n_theta, n_r)).unwrap()
}

#[test]
fn radial_p_function_is_constant() {
    let field = radial_reference(1.0, 2);
    for x in random_interior_points(&DomainSpec::disk(1.0).unwrap(), 50, 1) {
        assert!((p_function(&field, x) - 0.25).abs() <= 1e-15);
        assert!(cs_deficit(&field, x).unwrap().abs() <= 1e-15);
    }
}

#[test]
fn p_function_on_outer_curve_is_squared_flux() {
    let spec = DomainSpec::new(1.0, vec![FourierMode::cosine(2, 0.05)], vec![]).unwrap();
    let (model, _) = solve_dirichlet(&spec, 96, 1.5).unwrap();
    let q = quads(&spec, 64, 8);
    let outer = q.boundary.outer();
    for (x, nu) in outer.nodes.iter().zip(&outer.normals) {
        let e = model.eval(*x);
        let composed = e.gradient.norm_squared() - e.value;
        assert!((p_function(&model, *x) - composed).abs() <= 1e-12);
        assert!((p_function(&model, *x) - e.gradient.dot(nu).powi(2)).abs() <= 1e-8);
    }
}

#[test]
fn cauchy_deficit_self_convergence() {
    let spec = DomainSpec::new(1.0, vec![FourierMode::cosine(3, 0.05)], vec![]).unwrap();
    // The default ring at a third of the radius leaves a residual above tolerance at this amplitude.
    let options = |n| CauchyOptions { n_src_per_ring: n, inner_offset: 2.0, ..CauchyOptions::default() };
    let (coarse, _) = solve_cauchy(&spec, 0.5, options(128)).unwrap();
    let (fine, _) = solve_cauchy(&spec, 0.5, options(512)).unwrap();
    let x = Point::new(0.8, 0.0);
    let (a, b) = (cs_deficit(&coarse, x).unwrap(), cs_deficit(&fine, x).unwrap());
    assert!(a > 0.0);
    assert!((a - b).abs() <= 1e-6);
    assert!((a - deviation_hessian_norm(&coarse, x)).abs() <= 1e-12);
}

#[test]
fn pohozaev_on_unit_disk() {
    let spec = DomainSpec::disk(1.0).unwrap();
    let report = check_pohozaev(&radial_reference(1.0, 2), &quads(&spec, 128, 16));
    assert_relative_eq!(report.lhs, PI / 2.0, max_relative = 1e-10);
    assert_relative_eq!(report.rhs, PI / 2.0, max_relative = 1e-10);
    assert!(report.rel_residual <= 1e-8);
}

#[test]
fn radial_annulus_identities() {
    for rho in [0.1, 0.2, 0.4] {
        let spec = annulus(rho);
        let q = quads(&spec, 128, 16);
        let field = radial_reference(1.0, 2);
        assert!(check_pohozaev(&field, &q).rel_residual <= 1e-8);
        let fundamental = check_fundamental(&field, &q);
        assert!(fundamental.abs_residual <= 1e-9);
        assert!(fundamental.lhs.abs() <= 1e-12);
        let over = check_overdetermined(&field, &spec, 0.5, &q, OVERDETERMINATION_TOLERANCE).unwrap();
        for group in ["flux_squared", "hole_value", "hole_gradient"] {
            assert!(over.identity.group(group).abs() <= 1e-9, "{group}");
        }
        let c = compute_c(&spec, &field, &q).unwrap();
        assert_relative_eq!(c.value, 0.5, epsilon = 1e-12);
    }
}

#[test]
fn flux_constant_of_disk_scales_with_radius() {
    for r in [0.5, 1.0, 2.0] {
        let spec = DomainSpec::disk(r).unwrap();
        let c = compute_c(&spec, &radial_reference(r, 2), &quads(&spec, 128, 16)).unwrap();
        assert_relative_eq!(c.value, r / 2.0, epsilon = 1e-12);
    }
}

fn generic() -> DomainSpec {
    DomainSpec::new(1.0, vec![FourierMode::cosine(3, 0.1)], vec![Hole::new(Point::new(0.3, 0.2), 0.15, -0.05)]).unwrap()
}

#[test]
fn generic_identities_converge_under_refinement() {
    let spec = generic();
    let (model, _) = solve_dirichlet(&spec, 128, 1.5).unwrap();
    let base = quads(&spec, 128, 16);
    let doubled = quads(&spec, 256, 32);
    for check in [check_pohozaev, check_fundamental] {
        let (a, b) = (check(&model, &base).rel_residual, check(&model, &doubled).rel_residual);
        assert!(a <= 1e-4, "{a}");
        assert!(b <= a / 4.0, "{a} → {b}");
    }
}

#[test]
fn unequal_flux_is_a_hypothesis_failure() {
    let spec = generic();
    let (model, _) = solve_dirichlet(&spec, 96, 1.5).unwrap();
    let result = check_overdetermined(&model, &spec, 0.5, &quads(&spec, 128, 16), OVERDETERMINATION_TOLERANCE);
    assert!(matches!(result, Err(IdentityError::NotOverdetermined { .. })));
}

#[test]
fn center_self_convergence() {
    let spec = DomainSpec::new(1.0, vec![], vec![Hole::new(Point::new(0.4, 0.0), 0.1, -0.1)]).unwrap();
    let (coarse, _) = solve_dirichlet(&spec, 64, 1.5).unwrap();
    let (fine, _) = solve_dirichlet(&spec, 256, 1.5).unwrap();
    let z = compute_z(&spec, &coarse, &quads(&spec, 128, 16)).point;
    let oracle = compute_z(&spec, &fine, &quads(&spec, 1024, 128)).point;
    assert!((z - oracle).norm() <= 1e-6, "{z} vs {oracle}");
    assert!(z.y.abs() <= 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn deficit_is_nonnegative_and_matches_deviation(
        eps in -0.06f64..0.06,
        px in -0.7f64..0.7,
        py in -0.7f64..0.7,
    ) {
        let spec = DomainSpec::new(1.0, vec![FourierMode::cosine(2, eps)], vec![Hole::new(Point::new(-0.3, 0.3), 0.1, -0.1)]).unwrap();
        let (model, _) = solve_dirichlet(&spec, 64, 1.5).unwrap();
        let x = Point::new(px, py);
        prop_assume!(spec.contains(x));
        let d = cs_deficit(&model, x).unwrap();
        prop_assert!(d >= 0.0);
        prop_assert!((d - deviation_hessian_norm(&model, x)).abs() <= 1e-12 * (1.0 + d));
    }
}
