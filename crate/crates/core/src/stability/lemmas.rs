use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bounds::{a_np, alpha_np};
use super::StabilityError;
use crate::geometry::{
    delta, gauss_legendre, uniform_angles, AreaQuadrature, BoundaryComponent, DomainSpec, Quadratures,
};
use crate::numeric::golden_max;
use crate::solver::Field;
use crate::Point;

const N: f64 = crate::DIM as f64;

/// Slack below which a pointwise lemma counts as violated.
pub const LEMMA_TOLERANCE: f64 = 1e-9;

const EDGE_SAMPLES: usize = 4096;

/// Uniform samples of the open perforated region by rejection from its bounding box.
pub fn random_interior_points(spec: &DomainSpec, count: usize, seed: u64) -> Vec<Point> {
    let reach = spec.outer_radius() * (1.0 + spec.modes().iter().map(|m| m.magnitude()).sum::<f64>());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(count);
    while points.len() < count {
        let x = Point::new(rng.random_range(-reach..reach), rng.random_range(-reach..reach));
        if spec.contains(x) {
            points.push(x);
        }
    }
    points
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthWitness {
    pub point: Point,
    pub value: f64,
    pub distance: f64,
    pub quadratic_slack: f64,
    pub linear_slack: f64,
}

/// Slack of `−u ≥ δ²/(2N)` and `−u ≥ r_i δ/(2N)` over a sample set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub samples: usize,
    pub min_quadratic_slack: f64,
    pub min_linear_slack: f64,
    pub violations: usize,
    /// Sample with the smallest slack, reported when any sample violates either bound.
    pub witness: Option<GrowthWitness>,
}

impl GrowthReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

pub fn growth_checks(
    field: &dyn Field,
    spec: &DomainSpec,
    interior_radius: f64,
    samples: &[Point],
) -> Result<GrowthReport, StabilityError> {
    let rows = samples
        .par_iter()
        .map(|&x| {
            let d = delta(spec, x)?;
            let value = field.value(x);
            Ok(GrowthWitness {
                point: x,
                value,
                distance: d,
                quadratic_slack: -value - d * d / (2.0 * N),
                linear_slack: -value - interior_radius * d / (2.0 * N),
            })
        })
        .collect::<Result<Vec<_>, StabilityError>>()?;
    let violations =
        rows.iter().filter(|r| r.quadratic_slack < -LEMMA_TOLERANCE || r.linear_slack < -LEMMA_TOLERANCE).count();
    let worst = rows
        .iter()
        .min_by(|a, b| a.quadratic_slack.min(a.linear_slack).total_cmp(&b.quadratic_slack.min(b.linear_slack)))
        .copied();
    Ok(GrowthReport {
        samples: rows.len(),
        min_quadratic_slack: rows.iter().map(|r| r.quadratic_slack).fold(f64::INFINITY, f64::min),
        min_linear_slack: rows.iter().map(|r| r.linear_slack).fold(f64::INFINITY, f64::min),
        violations,
        witness: if violations > 0 { worst } else { None },
    })
}

/// `u_ν ≥ r_i/N` on the outer curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopfReport {
    pub threshold: f64,
    pub min_flux: f64,
    pub slack: f64,
    pub witness: Option<Point>,
}

impl HopfReport {
    pub fn passed(&self) -> bool {
        self.witness.is_none()
    }
}

pub fn hopf_check(field: &dyn Field, outer: &BoundaryComponent, interior_radius: f64) -> HopfReport {
    let threshold = interior_radius / N;
    let (x, min_flux) = outer
        .nodes
        .iter()
        .zip(&outer.normals)
        .map(|(x, nu)| (*x, field.gradient(*x).dot(nu)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("outer curve has nodes");
    let slack = min_flux - threshold;
    HopfReport { threshold, min_flux, slack, witness: (slack < -LEMMA_TOLERANCE).then_some(x) }
}

fn polished_max<F: Fn(f64) -> f64>(f: F) -> (f64, f64) {
    let h = 2.0 * PI / EDGE_SAMPLES as f64;
    let (t, v) =
        uniform_angles(EDGE_SAMPLES, 0.0).map(|t| (t, f(t))).max_by(|a, b| a.1.total_cmp(&b.1)).expect("samples");
    let (tp, vp) = golden_max(&f, t - h, t + h, 1e-12);
    if vp > v {
        (tp, vp)
    } else {
        (t, v)
    }
}

fn polished_min<F: Fn(f64) -> f64>(f: F) -> (f64, f64) {
    let (t, v) = polished_max(|s| -f(s));
    (t, -v)
}

/// Maximum of `|∇f|` on the closed collar of width `r_i`, taken over its two edges.
///
/// `|∇f|²` is subharmonic whenever `Δf` is constant.
pub fn tube_gradient_bound(field: &dyn Field, spec: &DomainSpec, interior_radius: f64) -> f64 {
    let on_outer = polished_max(|t| field.gradient(spec.outer_point(t)).norm()).1;
    let on_inner = polished_max(|t| {
        let f = spec.frame(t);
        field.gradient(f.point - interior_radius * f.normal()).norm()
    })
    .1;
    on_outer.max(on_inner)
}

fn disk_rule(center: Point, radius: f64) -> AreaQuadrature {
    let n_theta = 96;
    let dtheta = 2.0 * PI / n_theta as f64;
    let radial = gauss_legendre(32, 0.0, radius);
    let mut rule = AreaQuadrature::default();
    for t in uniform_angles(n_theta, 0.5) {
        let dir = Point::new(t.cos(), t.sin());
        for &(r, w) in &radial {
            rule.nodes.push(center + r * dir);
            rule.weights.push(w * r * dtheta);
        }
    }
    rule
}

fn lp_norm(rule: &AreaQuadrature, f: impl Fn(Point) -> f64 + Sync, p: f64) -> f64 {
    rule.integrate(|x| f(x).abs().powf(p)).powf(1.0 / p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "form")]
pub enum OscillationForm {
    /// `L^p` deviation from the region mean over the whole region.
    Mean,
    /// `L^p` deviation from `λ` over the tangent ball at the farthest boundary point
    /// (`λ` defaults to the region mean).
    Refined { lambda: Option<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum OscillationOutcome {
    Holds {
        slack: f64,
    },
    Violated {
        excess: f64,
    },
    /// The smallness precondition is unmet.
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationReport {
    pub form: OscillationForm,
    pub exponent: f64,
    pub gradient_bound: f64,
    pub lambda: f64,
    /// Center of the tangent ball used by the refined form.
    pub anchor: Option<Point>,
    pub oscillation: f64,
    pub deviation_norm: f64,
    pub smallness_threshold: f64,
    pub bound: f64,
    pub outcome: OscillationOutcome,
}

/// Oscillation of a harmonic `v` on the outer curve against its `L^p` deviation.
pub fn oscillation_bound_check(
    field: &dyn Field,
    spec: &DomainSpec,
    quads: &Quadratures,
    interior_radius: f64,
    p: f64,
    gradient_bound: f64,
    form: OscillationForm,
) -> Result<OscillationReport, StabilityError> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(StabilityError::InvalidInput(format!("exponent p must be ≥ 1, got {p}")));
    }
    if !(gradient_bound >= 0.0) || !(interior_radius > 0.0) {
        return Err(StabilityError::InvalidInput("gradient bound and interior radius must be nonnegative".into()));
    }
    let on_outer = |t: f64| field.value(spec.outer_point(t));
    let oscillation = polished_max(on_outer).1 - polished_min(on_outer).1;
    let mean = quads.area.integrate(|x| field.value(x)) / quads.area.total();
    let (lambda, anchor, deviation_norm) = match form {
        OscillationForm::Mean => (mean, None, lp_norm(&quads.area, |x| field.value(x) - mean, p)),
        OscillationForm::Refined { lambda } => {
            let lambda = lambda.unwrap_or(mean);
            let (t, _) = polished_max(|t| (on_outer(t) - lambda).abs());
            let frame = spec.frame(t);
            let anchor = frame.point - interior_radius * frame.normal();
            let ball = disk_rule(anchor, interior_radius);
            (lambda, Some(anchor), lp_norm(&ball, |x| field.value(x) - lambda, p))
        }
    };
    let n_dim = crate::DIM as u32;
    let smallness_threshold = alpha_np(n_dim, p) * interior_radius.powf((N + p) / p) * gradient_bound;
    let bound = a_np(n_dim, p) * gradient_bound.powf(N / (N + p)) * deviation_norm.powf(p / (N + p));
    let rounding = 1e-12 * (1.0 + lambda.abs());
    let outcome = if deviation_norm > smallness_threshold + rounding {
        OscillationOutcome::NotApplicable
    } else if oscillation <= bound * (1.0 + 1e-9) + 1e-12 {
        OscillationOutcome::Holds { slack: bound - oscillation }
    } else {
        OscillationOutcome::Violated { excess: oscillation - bound }
    };
    Ok(OscillationReport {
        form,
        exponent: p,
        gradient_bound,
        lambda,
        anchor,
        oscillation,
        deviation_norm,
        smallness_threshold,
        bound,
        outcome,
    })
}
