use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::bounds::{bound_table, check_flux_bracket, exponents_tau, BoundInputs, BoundTable, BracketCheck, Regime};
use super::functionals::{
    asymmetry, asymmetry_lemma_constant, compute_z, compute_z_tubular, pseudo_distance, CenterPoint,
};
use super::lemmas::{
    growth_checks, hopf_check, random_interior_points, tube_gradient_bound, GrowthReport, HopfReport, LEMMA_TOLERANCE,
};
use super::StabilityError;
use crate::geometry::{
    delta, diameter, interior_sphere_radius, rho_e_rho_i, tubular_sets, DomainSpec, QuadratureResolution, Quadratures,
};
use crate::identities::{compute_c, max_flux_deviation, IdentityError, OVERDETERMINATION_TOLERANCE};
use crate::numeric::linear_fit;
use crate::solver::{singularities_in_region, Field};

const N: f64 = crate::DIM as f64;

/// A solution field on a domain, ready for the stability checks.
#[derive(Clone)]
pub struct Instance {
    pub id: String,
    pub spec: DomainSpec,
    pub field: Arc<dyn Field>,
    pub resolution: QuadratureResolution,
}

impl std::fmt::Debug for Instance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Instance").field("id", &self.id).field("spec", &self.spec).finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteOptions {
    pub regime: Regime,
    pub theta: Option<f64>,
    pub overdetermination_tolerance: f64,
    /// Report the overdetermined condition without listing it as a failed hypothesis.
    pub waive_overdetermination: bool,
    pub growth_samples: usize,
    pub seed: u64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            regime: Regime::SphereCondition,
            theta: None,
            overdetermination_tolerance: OVERDETERMINATION_TOLERANCE,
            waive_overdetermination: false,
            growth_samples: 10_000,
            seed: 0,
        }
    }
}

/// A theorem hypothesis that the instance fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "hypothesis")]
pub enum Hypothesis {
    NotOverdetermined { max_deviation: f64, tolerance: f64 },
    PositiveHoleTrace { max_value: f64 },
    CenterOutside { x: f64, y: f64 },
    SingularInRegion { count: usize },
    InconsistentFlux { mismatch: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inequality {
    /// `D² ≤ C |∂ω|`.
    PseudoDistance,
    /// `A ≤ C |∂ω|^{1/2}`.
    Asymmetry,
    /// `ρ_e − ρ_i ≤ C |∂ω|^{τ/2}`.
    RadiiGap,
    /// `D² ≤ C ψ(η)`.
    PseudoDistancePsi,
    /// `A ≤ C ψ(η)^{1/2}`.
    AsymmetryPsi,
    /// `ρ_e − ρ_i ≤ C ψ(η)^{τ/2}`.
    RadiiGapPsi,
}

impl Inequality {
    pub const ALL: [Inequality; 6] = [
        Inequality::PseudoDistance,
        Inequality::Asymmetry,
        Inequality::RadiiGap,
        Inequality::PseudoDistancePsi,
        Inequality::AsymmetryPsi,
        Inequality::RadiiGapPsi,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Inequality::PseudoDistance => "pseudo_distance",
            Inequality::Asymmetry => "asymmetry",
            Inequality::RadiiGap => "radii_gap",
            Inequality::PseudoDistancePsi => "pseudo_distance_psi",
            Inequality::AsymmetryPsi => "asymmetry_psi",
            Inequality::RadiiGapPsi => "radii_gap_psi",
        }
    }
}

/// Left side and driver of one inequality on one instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityRow {
    pub inequality: Inequality,
    pub lhs: Option<f64>,
    pub driver: f64,
    /// `lhs / driver`, with `0/0 = 0`.
    pub ratio: Option<f64>,
}

fn row(inequality: Inequality, lhs: Option<f64>, driver: f64) -> InequalityRow {
    let ratio = lhs.map(|l| if l == 0.0 { 0.0 } else { l / driver });
    InequalityRow { inequality, lhs, driver, ratio }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub id: String,
    pub regime: Regime,
    pub tau: f64,
    pub center: CenterPoint,
    pub flux: f64,
    pub flux_mismatch: f64,
    pub max_flux_deviation: f64,
    pub rho_e: Option<f64>,
    pub rho_i: Option<f64>,
    pub radii_gap: Option<f64>,
    pub pseudo_distance: f64,
    pub asymmetry: Option<f64>,
    /// Explicit constant in `A ≤ C·√D²` (star-shaped outer curve only).
    pub asymmetry_lemma_constant: Option<f64>,
    pub asymmetry_lemma_holds: Option<bool>,
    /// `max{Nc/r_i, (d_Ω/(2Nc))^N}`.
    pub asymmetry_lemma_scale: f64,
    pub interior_radius: f64,
    pub diameter: f64,
    /// `max |∇u|` over the closed collar of width `r_i`.
    pub gradient_bound: f64,
    /// `‖u‖_{C²(∂ω)}` as the largest `|u| + |∇u| + |∇²u|_F` on the hole nodes.
    pub hole_c2_norm: f64,
    pub holes_perimeter: f64,
    pub max_hole_diameter: f64,
    pub eta: f64,
    pub psi: f64,
    pub bounds: BoundTable,
    pub bracket: BracketCheck,
    pub growth: GrowthReport,
    pub hopf: HopfReport,
    pub hypotheses: Vec<Hypothesis>,
    pub rows: Vec<InequalityRow>,
}

impl StabilityReport {
    pub fn hypotheses_hold(&self) -> bool {
        self.hypotheses.is_empty()
    }

    pub fn row(&self, inequality: Inequality) -> &InequalityRow {
        self.rows.iter().find(|r| r.inequality == inequality).expect("every inequality has a row")
    }
}

/// Largest `|u| + |∇u| + |∇²u|_F` over the hole quadrature nodes.
pub fn hole_c2_norm(field: &dyn Field, quads: &Quadratures) -> f64 {
    quads
        .boundary
        .holes()
        .flat_map(|c| c.nodes.iter())
        .map(|x| {
            let e = field.eval(*x);
            e.value.abs() + e.gradient.norm() + e.hessian.norm()
        })
        .fold(0.0, f64::max)
}

pub fn theorem_suite(instance: &Instance, options: &SuiteOptions) -> Result<StabilityReport, StabilityError> {
    let spec = &instance.spec;
    let field: &dyn Field = instance.field.as_ref();
    let quads = Quadratures::build(spec, instance.resolution)?;
    let tau = exponents_tau(crate::DIM as u32, options.regime, options.theta)?;
    let mut hypotheses = Vec::new();

    let (flux, flux_mismatch) = match compute_c(spec, field, &quads) {
        Ok(c) => (c.value, c.mismatch),
        Err(IdentityError::InconsistentFlux { balance, mismatch, .. }) => {
            hypotheses.push(Hypothesis::InconsistentFlux { mismatch });
            (balance, mismatch)
        }
        Err(e) => return Err(e.into()),
    };
    let max_deviation = max_flux_deviation(field, &quads, flux);
    if !options.waive_overdetermination && !(max_deviation <= options.overdetermination_tolerance) {
        hypotheses
            .push(Hypothesis::NotOverdetermined { max_deviation, tolerance: options.overdetermination_tolerance });
    }
    let max_hole_value =
        quads.boundary.holes().flat_map(|c| c.nodes.iter()).map(|x| field.value(*x)).fold(f64::NEG_INFINITY, f64::max);
    if max_hole_value > LEMMA_TOLERANCE {
        hypotheses.push(Hypothesis::PositiveHoleTrace { max_value: max_hole_value });
    }
    let singular = singularities_in_region(field, spec).len();
    if singular > 0 {
        hypotheses.push(Hypothesis::SingularInRegion { count: singular });
    }

    let ri = interior_sphere_radius(spec)?;
    let d = diameter(spec);
    let center = match options.regime {
        Regime::SphereCondition => compute_z(spec, field, &quads),
        Regime::JohnRelaxed => {
            let tube = tubular_sets(spec, ri, ri, 24, instance.resolution.n_theta)?;
            compute_z_tubular(spec, field, &tube)
        }
    };
    let z = center.point;
    if !center.inside {
        hypotheses.push(Hypothesis::CenterOutside { x: z.x, y: z.y });
    }
    let radii = rho_e_rho_i(spec, z).ok();
    let radii_gap = radii.map(|(e, i)| e - i);
    let pseudo = pseudo_distance(quads.boundary.outer(), z, flux);
    let asym = if flux > 0.0 { Some(asymmetry(spec, z, flux)?) } else { None };
    let lemma_constant = radii.and_then(|(e, i)| asymmetry_lemma_constant(spec, z, flux, e, i));
    let lemma_holds = lemma_constant.zip(asym).map(|(k, a)| a <= k * pseudo.sqrt() + 1e-12);
    let asymmetry_lemma_scale = (N * flux / ri).max((d / (2.0 * N * flux)).powf(N));

    let gradient_bound = tube_gradient_bound(field, spec, ri);
    let k = hole_c2_norm(field, &quads);
    let eta = spec.holes_perimeter();
    let psi = k.max(k.powi(3)) * eta;
    let anchor_distance = if spec.contains(z) { delta(spec, z)? } else { 0.0 };
    let bounds = bound_table(&BoundInputs {
        dimension: crate::DIM as u32,
        interior_radius: ri,
        diameter: d,
        region_area: spec.region_area(),
        holes_perimeter: eta,
        hole_c2_norm: k,
        anchor_distance,
    })?;
    let bracket = check_flux_bracket(flux, &bounds);
    let samples = random_interior_points(spec, options.growth_samples, options.seed);
    let growth = growth_checks(field, spec, ri, &samples)?;
    let hopf = hopf_check(field, quads.boundary.outer(), ri);

    let rows = vec![
        row(Inequality::PseudoDistance, Some(pseudo), eta),
        row(Inequality::Asymmetry, asym, eta.sqrt()),
        row(Inequality::RadiiGap, radii_gap, eta.powf(tau / 2.0)),
        row(Inequality::PseudoDistancePsi, Some(pseudo), psi),
        row(Inequality::AsymmetryPsi, asym, psi.sqrt()),
        row(Inequality::RadiiGapPsi, radii_gap, psi.powf(tau / 2.0)),
    ];
    Ok(StabilityReport {
        id: instance.id.clone(),
        regime: options.regime,
        tau,
        center,
        flux,
        flux_mismatch,
        max_flux_deviation: max_deviation,
        rho_e: radii.map(|r| r.0),
        rho_i: radii.map(|r| r.1),
        radii_gap,
        pseudo_distance: pseudo,
        asymmetry: asym,
        asymmetry_lemma_constant: lemma_constant,
        asymmetry_lemma_holds: lemma_holds,
        asymmetry_lemma_scale,
        interior_radius: ri,
        diameter: d,
        gradient_bound,
        hole_c2_norm: k,
        holes_perimeter: eta,
        max_hole_diameter: spec.max_hole_diameter(),
        eta,
        psi,
        bounds,
        bracket,
        growth,
        hopf,
        hypotheses,
        rows,
    })
}

/// Single constant per inequality over the instances whose hypotheses hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedConstant {
    pub inequality: Inequality,
    /// Largest `lhs / driver`; absent when no instance qualifies.
    pub constant: Option<f64>,
    pub included: usize,
    pub excluded: usize,
    /// Least-squares line of `log lhs` against `log driver`: slope, intercept, R².
    pub log_log_fit: Option<(f64, f64, f64)>,
}

pub fn fit_constants(reports: &[StabilityReport]) -> Vec<FittedConstant> {
    Inequality::ALL
        .iter()
        .map(|&inequality| {
            let rows: Vec<&InequalityRow> = reports
                .iter()
                .filter(|r| r.hypotheses_hold())
                .map(|r| r.row(inequality))
                .filter(|r| r.ratio.is_some())
                .collect();
            let constant = rows.iter().filter_map(|r| r.ratio).reduce(f64::max);
            let (xs, ys): (Vec<f64>, Vec<f64>) = rows
                .iter()
                .filter_map(|r| r.lhs.filter(|l| *l > 0.0 && r.driver > 0.0).map(|l| (r.driver.ln(), l.ln())))
                .unzip();
            FittedConstant {
                inequality,
                constant,
                included: rows.len(),
                excluded: reports.len() - rows.len(),
                log_log_fit: linear_fit(&xs, &ys),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Hole;
    use crate::solver::radial_reference;
    use crate::Point;

    fn radial_instance(rho: f64) -> Instance {
        let spec = DomainSpec::new(1.0, vec![], vec![Hole::new(Point::zeros(), rho, (rho * rho - 1.0) / 4.0)]).unwrap();
        Instance {
            id: format!("radial-{rho}"),
            spec,
            field: Arc::new(radial_reference(1.0, 2)),
            resolution: QuadratureResolution::new(128, 16),
        }
    }

    #[test]
    fn radial_family_is_exact() {
        let options = SuiteOptions { growth_samples: 500, ..SuiteOptions::default() };
        let reports: Vec<_> =
            [0.05, 0.1, 0.2].iter().map(|&r| theorem_suite(&radial_instance(r), &options).unwrap()).collect();
        for r in &reports {
            assert!(r.hypotheses_hold(), "{:?}", r.hypotheses);
            assert!(r.pseudo_distance.abs() <= 1e-10);
            assert!(r.asymmetry.unwrap() <= 1e-6);
            assert!(r.radii_gap.unwrap() <= 1e-8);
            assert!(r.growth.passed() && r.hopf.passed() && r.bracket.inside);
        }
        for f in fit_constants(&reports) {
            assert!(f.constant.unwrap() <= 1e-6, "{:?}", f);
        }
    }

    #[test]
    fn shifted_center_is_flagged() {
        let spec = DomainSpec::new(1.0, vec![], vec![Hole::new(Point::new(0.5, 0.0), 0.2, -0.1)]).unwrap();
        let inst = Instance {
            id: "shifted".into(),
            spec,
            field: Arc::new(crate::solver::HarmonicField::polynomial(1, 100.0, 0.0)),
            resolution: QuadratureResolution::new(128, 16),
        };
        let options = SuiteOptions { growth_samples: 100, waive_overdetermination: true, ..SuiteOptions::default() };
        let r = theorem_suite(&inst, &options).unwrap();
        assert!(r.hypotheses.iter().any(|h| matches!(h, Hypothesis::CenterOutside { .. })), "{:?}", r.center);
        assert!(r.radii_gap.is_none());
    }
}
