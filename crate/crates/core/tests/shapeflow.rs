use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use torsion_lab::geometry::{DomainSpec, FourierMode, QuadratureResolution};
use torsion_lab::shapeflow::{
    descend, energy, perturbed, shape_gradient, DescentOptions, FlowSettings, Termination, VelocityField,
};

fn random_velocity(rng: &mut ChaCha8Rng) -> VelocityField {
    let modes = (1..=5)
        .map(|k| FourierMode { k, cos: rng.random_range(-1.0..1.0), sin: rng.random_range(-1.0..1.0) })
        .collect();
    VelocityField { dilation: rng.random_range(-0.5..0.5), modes }
}

fn central_difference(spec: &DomainSpec, v: &VelocityField, t: f64, settings: &FlowSettings) -> f64 {
    let at = |s: f64| energy(&perturbed(spec, v, s).unwrap(), settings).unwrap();
    (at(t) - at(-t)) / (2.0 * t)
}

#[test]
fn energy_self_convergence() {
    let spec = DomainSpec::new(1.0, vec![FourierMode::cosine(2, 0.05)], vec![]).unwrap();
    let spec = DomainSpec::new((PI / spec.outer_area()).sqrt(), spec.modes().to_vec(), vec![]).unwrap();
    let base = FlowSettings { n_src: 64, offset_ratio: 1.5, resolution: QuadratureResolution::new(128, 16) };
    let oracle = FlowSettings { n_src: 256, offset_ratio: 1.5, resolution: QuadratureResolution::new(1024, 128) };
    let (a, b) = (energy(&spec, &base).unwrap(), energy(&spec, &oracle).unwrap());
    assert!((a - b).abs() <= 1e-5, "{a} vs {b}");
}

#[test]
fn gradient_matches_finite_differences_for_random_fields() {
    let settings = FlowSettings::default();
    let specs = [
        DomainSpec::new(1.0, vec![FourierMode::cosine(2, 0.05)], vec![]).unwrap(),
        DomainSpec::new(1.2, vec![FourierMode::cosine(3, 0.04), FourierMode::sine(4, 0.01)], vec![]).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for spec in &specs {
        for _ in 0..5 {
            let v = random_velocity(&mut rng).project_area_preserving(spec).0;
            let g = shape_gradient(spec, &v, 6, &settings).unwrap();
            assert!(g.removed.abs() <= 1e-12);
            let fd = central_difference(spec, &v, 1e-4, &settings);
            assert!((g.value - fd).abs() / (fd.abs() + 1e-12) <= 1e-3, "{} vs {fd}", g.value);
        }
    }
}

#[test]
fn ball_gradient_vanishes_for_every_basis_field() {
    let g = shape_gradient(&DomainSpec::disk(1.3).unwrap(), &VelocityField::cosine(1), 12, &FlowSettings::default())
        .unwrap();
    assert!(g.value.abs() <= 1e-9);
    for m in &g.modes {
        assert!(m.cos.abs() <= 1e-9 && m.sin.abs() <= 1e-9, "{m:?}");
    }
}

#[test]
fn flow_from_three_fold_shape_reaches_the_disk() {
    let spec = DomainSpec::new(1.0, vec![FourierMode::cosine(3, 0.05)], vec![]).unwrap();
    let trajectory = descend(&spec, &DescentOptions::default()).unwrap();
    assert_eq!(trajectory.termination, Termination::Converged);
    let last = trajectory.states.last().unwrap();
    assert!(trajectory.states.len() <= 201);
    assert!(last.flux_ratio() <= 1e-3);
    assert!(last.radii_gap <= 5e-3);
    assert!(last.max_flux_deviation <= 2e-3 * last.flux_constant);
    assert!(last.pseudo_distance <= 1e-4);
    for pair in trajectory.states.windows(2) {
        assert!(pair[1].energy >= pair[0].energy);
    }
    assert!(trajectory.states.iter().all(|s| s.area_drift.abs() <= 1e-5));
}

#[test]
fn flux_spread_never_grows_on_two_mode_start() {
    let spec = DomainSpec::new(1.0, vec![FourierMode::cosine(2, 0.03), FourierMode::cosine(3, 0.03)], vec![]).unwrap();
    let trajectory = descend(&spec, &DescentOptions::default()).unwrap();
    assert_eq!(trajectory.termination, Termination::Converged);
    for pair in trajectory.states.windows(2) {
        assert!(pair[1].flux_std <= pair[0].flux_std);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn projected_fields_preserve_area_to_first_order(
        r0 in 0.5f64..2.0,
        a in -0.04f64..0.04,
        b in -0.04f64..0.04,
        d in -1.0f64..1.0,
        c2 in -1.0f64..1.0,
        s3 in -1.0f64..1.0,
    ) {
        let spec = DomainSpec::new(r0, vec![FourierMode { k: 2, cos: a, sin: b }], vec![]).unwrap();
        let v = VelocityField { dilation: d, modes: vec![FourierMode::cosine(2, c2), FourierMode::sine(3, s3)] };
        let (p, _) = v.project_area_preserving(&spec);
        prop_assert!(p.area_rate(&spec).abs() <= 1e-12);
        let t = 1e-5;
        let rate = (perturbed(&spec, &p, t).unwrap().outer_area() - perturbed(&spec, &p, -t).unwrap().outer_area()) / (2.0 * t);
        prop_assert!(rate.abs() <= 1e-6);
    }
}
