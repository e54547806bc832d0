use serde::{Deserialize, Serialize};

use super::poincare::PoincareExponents;
use super::StabilityError;
use crate::numeric::unit_ball_volume;

/// Multiplier in the oscillation bound.
pub fn a_np(n: u32, p: f64) -> f64 {
    let nf = f64::from(n);
    let s = nf + p;
    2.0 * s / (nf.powf(nf / s) * p.powf(p / s) * unit_ball_volume(n).powf(1.0 / s))
}

/// Multiplier in the smallness precondition of the oscillation bound.
pub fn alpha_np(n: u32, p: f64) -> f64 {
    p / f64::from(n) * unit_ball_volume(n).powf(1.0 / p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Uniform interior sphere condition on the whole boundary.
    SphereCondition,
    /// Interior sphere condition on the outer curve only, John-type region.
    JohnRelaxed,
}

/// Exponent of the radii gap in terms of the driver; `θ ∈ (0, 1)` is needed where the
/// exponent can only be taken arbitrarily close to its limit.
pub fn exponents_tau(n: u32, regime: Regime, theta: Option<f64>) -> Result<f64, StabilityError> {
    if n < 2 {
        return Err(StabilityError::Dimension(n));
    }
    let theta = || match theta {
        Some(t) if t > 0.0 && t < 1.0 => Ok(t),
        _ => Err(StabilityError::MissingTheta { n }),
    };
    let nf = f64::from(n);
    Ok(match (regime, n) {
        (Regime::SphereCondition, 2) => 1.0,
        (Regime::SphereCondition, 3) => 1.0 - theta()?,
        (Regime::SphereCondition, _) => 2.0 / (nf - 1.0),
        (Regime::JohnRelaxed, 2) => 1.0 - theta()?,
        (Regime::JohnRelaxed, _) => 2.0 / nf,
    })
}

/// Geometric and trace data needed by the closed-form bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub dimension: u32,
    pub interior_radius: f64,
    pub diameter: f64,
    pub region_area: f64,
    pub holes_perimeter: f64,
    /// `‖u‖_{C²(∂ω)}`.
    pub hole_c2_norm: f64,
    /// Distance to the boundary of the anchor point in the pointwise Poincaré bounds.
    pub anchor_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoincareBound {
    pub exponents: PoincareExponents,
    /// Bound on the mean-zero constant with the unknown universal factor set to 1.
    pub mean_normalized: f64,
    /// Bound on the constant for functions vanishing at the anchor, same normalization.
    pub anchored_normalized: f64,
}

/// Closed-form constants and bounds evaluated on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundTable {
    pub a_22: f64,
    pub alpha_22: f64,
    pub flux_lower: f64,
    /// Certified upper bound, present when `|∂ω| < 1`.
    pub flux_upper: Option<f64>,
    /// Upper bound that holds once the hole data are small enough; not certified.
    pub flux_upper_small_data: f64,
    pub john_bound: f64,
    pub hopf_threshold: f64,
    pub poincare: Vec<PoincareBound>,
}

pub(crate) fn poincare_bound(e: &PoincareExponents, inputs: &BoundInputs) -> PoincareBound {
    let n = f64::from(e.dimension);
    let (d, ri) = (inputs.diameter, inputs.interior_radius);
    let anchored_radius = ri.min(inputs.anchor_distance);
    let (mean, anchored) = match e.regime {
        super::ExponentRegime::Sobolev => {
            let volume = inputs.region_area.powf((1.0 - e.alpha) / n + 1.0 / e.r + 1.0 / e.p);
            ((d / ri).powf(n) * volume, (d / anchored_radius).powf(n) * volume)
        }
        super::ExponentRegime::Diagonal => {
            let k = 3.0 * n * (1.0 + n / e.p);
            (d.powf(k + 1.0) / ri.powf(k), d.powf(k + 1.0) / anchored_radius.powf(k))
        }
    };
    PoincareBound { exponents: *e, mean_normalized: mean, anchored_normalized: anchored }
}

pub fn bound_table(inputs: &BoundInputs) -> Result<BoundTable, StabilityError> {
    let n = inputs.dimension;
    if n < 2 {
        return Err(StabilityError::Dimension(n));
    }
    if !(inputs.interior_radius > 0.0) || !(inputs.diameter > 0.0) || !(inputs.region_area > 0.0) {
        return Err(StabilityError::InvalidInput("radius, diameter and area must be positive".into()));
    }
    let nf = f64::from(n);
    let (ri, d) = (inputs.interior_radius, inputs.diameter);
    let flux_upper = (inputs.holes_perimeter < 1.0)
        .then(|| d / (2.0 * nf) + inputs.hole_c2_norm / (nf * unit_ball_volume(n) * ri.powf(nf - 1.0)));
    let poincare = [
        PoincareExponents::new(n, 2.0, 2.0, 0.5)?,
        PoincareExponents::new(n, 2.0, 2.0, 0.0)?,
        PoincareExponents::new(n, 2.0, 2.0, 1.0)?,
    ]
    .iter()
    .map(|e| poincare_bound(e, inputs))
    .collect();
    Ok(BoundTable {
        a_22: a_np(2, 2.0),
        alpha_22: alpha_np(2, 2.0),
        flux_lower: ri / nf,
        flux_upper,
        flux_upper_small_data: d / (4.0 * nf),
        john_bound: d / ri,
        hopf_threshold: ri / nf,
        poincare,
    })
}

/// Whether a measured flux constant lies in the certified bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BracketCheck {
    pub flux: f64,
    pub lower: f64,
    pub upper: Option<f64>,
    pub inside: bool,
}

pub fn check_flux_bracket(flux: f64, table: &BoundTable) -> BracketCheck {
    let inside = flux >= table.flux_lower - 1e-12 && table.flux_upper.is_none_or(|u| flux <= u + 1e-12);
    BracketCheck { flux, lower: table.flux_lower, upper: table.flux_upper, inside }
}
