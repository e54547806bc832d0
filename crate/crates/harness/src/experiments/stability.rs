use serde::Serialize;
use serde_json::{json, Value};
use torsion_lab::geometry::DomainSpec;
use torsion_lab::stability::{
    fit_constants, theorem_suite, FittedConstant, Hypothesis, Inequality, Instance, StabilityReport,
};

use super::{build_field, instance_error, Case, Experiment, FieldSource};
use crate::config::ScenarioConfig;
use crate::report::Assertion;
use crate::tables::{column, Cell, Column, Table};
use crate::HarnessError;

pub(crate) struct Stability;

#[derive(Debug, Clone, Serialize)]
pub(crate) struct Record {
    pub id: String,
    pub axis_value: Option<f64>,
    pub spec: DomainSpec,
    pub field: FieldSource,
    /// Hypotheses hold and the field solve converged.
    pub qualifies: bool,
    pub report: StabilityReport,
}

const COLUMNS: &[Column] = &[
    column("instance", "-", "instance id"),
    column("axis_value", "axis", "sweep value, empty for a single run"),
    column("converged", "-", "field solve met its residual tolerance"),
    column("solve_residual", "du^2", "largest boundary residual of the solve"),
    column("qualifies", "-", "converged and every hypothesis holds; only these enter the fitted constants"),
    column("hypotheses", "-", "failed hypotheses, separated by ';'"),
    column("holes_perimeter_du", "du", "total hole perimeter |∂ω|"),
    column("max_hole_diameter_du", "du", "largest hole diameter η"),
    column("hole_c2_norm", "mixed", "largest |u| + |∇u| + |∇²u| on the holes, K"),
    column("psi", "mixed", "max(K, K³)·|∂ω|"),
    column("flux_du", "du", "flux constant c"),
    column("flux_mismatch_du", "du", "disagreement of the two flux estimates"),
    column("max_flux_deviation_du", "du", "max over the outer curve of |u_ν − c|"),
    column("center_x_du", "du", "center point, x"),
    column("center_y_du", "du", "center point, y"),
    column("center_inside", "-", "center lies in the region"),
    column("rho_e_du", "du", "smallest radius about the center enclosing the outer curve"),
    column("rho_i_du", "du", "largest radius about the center inside the outer curve"),
    column("radii_gap_du", "du", "rho_e − rho_i"),
    column("pseudo_distance_du3", "du^3", "D²: integral over the outer curve of (|x − z|/2 − c)²"),
    column("asymmetry", "1", "A: |Ω Δ B_c(z)| / |B_c(z)|"),
    column("interior_radius_du", "du", "uniform interior sphere radius r_i"),
    column("diameter_du", "du", "diameter of the outer curve"),
    column("growth_samples", "-", "interior points tested by the growth lemmas"),
    column("growth_violations", "-", "points violating either growth lemma"),
    column("growth_min_slack_du2", "du^2", "smallest slack of the quadratic growth lemma"),
    column("hopf_min_flux_du", "du", "smallest u_ν on the outer curve"),
    column("hopf_threshold_du", "du", "Hopf lower bound r_i/2"),
    column("bracket_lower_du", "du", "lower bound on c"),
    column("bracket_upper_du", "du", "upper bound on c, empty when the side condition fails"),
    column("bracket_inside", "-", "c lies within the bracket"),
    column("driver_pseudo_distance", "du", "|∂ω|"),
    column("ratio_pseudo_distance", "mixed", "D² / |∂ω|"),
    column("driver_asymmetry", "du^0.5", "|∂ω|^(1/2)"),
    column("ratio_asymmetry", "mixed", "A / |∂ω|^(1/2)"),
    column("driver_radii_gap", "mixed", "|∂ω|^(τ/2)"),
    column("ratio_radii_gap", "mixed", "(ρ_e − ρ_i) / |∂ω|^(τ/2)"),
    column("driver_pseudo_distance_psi", "mixed", "ψ"),
    column("ratio_pseudo_distance_psi", "mixed", "D² / ψ"),
    column("driver_asymmetry_psi", "mixed", "ψ^(1/2)"),
    column("ratio_asymmetry_psi", "mixed", "A / ψ^(1/2)"),
    column("driver_radii_gap_psi", "mixed", "ψ^(τ/2)"),
    column("ratio_radii_gap_psi", "mixed", "(ρ_e − ρ_i) / ψ^(τ/2)"),
];

const CONSTANT_COLUMNS: &[Column] = &[
    column("inequality", "-", "inequality name; lhs ≤ C · driver"),
    column("constant", "mixed", "largest lhs/driver over qualifying instances"),
    column("included", "-", "qualifying instances"),
    column("excluded", "-", "instances left out"),
    column("slope", "1", "least-squares slope of log lhs against log driver"),
    column("intercept", "1", "intercept of that fit"),
    column("r_squared", "1", "coefficient of determination of that fit"),
];

fn describe(h: &Hypothesis) -> String {
    match h {
        Hypothesis::NotOverdetermined { max_deviation, tolerance } => {
            format!("outer flux not constant: max |u_ν − c| = {max_deviation:e} > {tolerance:e}")
        }
        Hypothesis::PositiveHoleTrace { max_value } => format!("u > 0 on a hole: max {max_value:e}"),
        Hypothesis::CenterOutside { x, y } => format!("center ({x}, {y}) outside the region"),
        Hypothesis::SingularInRegion { count } => format!("{count} singularities inside the region"),
        Hypothesis::InconsistentFlux { mismatch } => format!("flux estimates differ by {mismatch:e}"),
    }
}

fn qualifying(records: &[Record]) -> impl Iterator<Item = &Record> {
    records.iter().filter(|r| r.qualifies)
}

fn fitted(records: &[Record]) -> Vec<FittedConstant> {
    let reports: Vec<StabilityReport> = qualifying(records).map(|r| r.report.clone()).collect();
    let mut constants = fit_constants(&reports);
    let excluded = records.len() - reports.len();
    for c in &mut constants {
        c.excluded += excluded;
    }
    constants
}

impl Experiment for Stability {
    type Record = Record;

    fn run_case(&self, config: &ScenarioConfig, case: &Case) -> Result<Record, HarnessError> {
        let (field, source) = build_field(config, case)?;
        let instance = Instance {
            id: case.id.clone(),
            spec: case.spec.clone(),
            field,
            resolution: config.quadrature.resolution(),
        };
        let report = theorem_suite(&instance, &config.suite_options()).map_err(|e| instance_error(&case.id, e))?;
        Ok(Record {
            id: case.id.clone(),
            axis_value: case.axis_value,
            spec: case.spec.clone(),
            qualifies: source.converged() && report.hypotheses_hold(),
            field: source,
            report,
        })
    }

    fn tables(&self, records: &[Record]) -> Vec<Table> {
        let mut table = Table::new("stability", COLUMNS);
        for r in records {
            let s = &r.report;
            let mut hypotheses: Vec<String> = s.hypotheses.iter().map(describe).collect();
            if !r.field.converged() {
                hypotheses.insert(0, format!("solve residual {:e}", r.field.residual()));
            }
            let mut row: Vec<Cell> = vec![
                r.id.as_str().into(),
                r.axis_value.into(),
                r.field.converged().into(),
                r.field.residual().into(),
                r.qualifies.into(),
                hypotheses.join(";").into(),
                s.holes_perimeter.into(),
                s.max_hole_diameter.into(),
                s.hole_c2_norm.into(),
                s.psi.into(),
                s.flux.into(),
                s.flux_mismatch.into(),
                s.max_flux_deviation.into(),
                s.center.point.x.into(),
                s.center.point.y.into(),
                s.center.inside.into(),
                s.rho_e.into(),
                s.rho_i.into(),
                s.radii_gap.into(),
                s.pseudo_distance.into(),
                s.asymmetry.into(),
                s.interior_radius.into(),
                s.diameter.into(),
                s.growth.samples.into(),
                s.growth.violations.into(),
                s.growth.min_quadratic_slack.into(),
                s.hopf.min_flux.into(),
                s.hopf.threshold.into(),
                s.bracket.lower.into(),
                s.bracket.upper.into(),
                s.bracket.inside.into(),
            ];
            for inequality in Inequality::ALL {
                let ir = s.row(inequality);
                row.push(ir.driver.into());
                row.push(ir.ratio.into());
            }
            table.push(row);
        }
        let mut constants = Table::new("constants", CONSTANT_COLUMNS);
        for c in fitted(records) {
            let fit = c.log_log_fit;
            constants.push(vec![
                c.inequality.name().into(),
                c.constant.into(),
                c.included.into(),
                c.excluded.into(),
                fit.map(|f| f.0).into(),
                fit.map(|f| f.1).into(),
                fit.map(|f| f.2).into(),
            ]);
        }
        vec![table, constants]
    }

    fn assertions(&self, _config: &ScenarioConfig, records: &[Record]) -> Vec<Assertion> {
        let any = records.iter().any(|r| r.qualifies);
        let first_reason = records.first().map(|r| {
            let mut reasons: Vec<String> = r.report.hypotheses.iter().map(describe).collect();
            if !r.field.converged() {
                reasons.insert(0, format!("solve residual {:e}", r.field.residual()));
            }
            format!("no instance satisfies the hypotheses; {}: {}", r.id, reasons.join("; "))
        });
        let growth = qualifying(records).find(|r| !r.report.growth.passed()).map(|r| {
            format!("{}: {} growth violations, first {:?}", r.id, r.report.growth.violations, r.report.growth.witness)
        });
        let hopf = qualifying(records).find(|r| !r.report.hopf.passed()).map(|r| {
            format!(
                "{}: min u_ν {:e} below {:e} at {:?}",
                r.id, r.report.hopf.min_flux, r.report.hopf.threshold, r.report.hopf.witness
            )
        });
        let bracket = qualifying(records)
            .filter(|r| r.report.holes_perimeter < 1.0)
            .find(|r| !r.report.bracket.inside)
            .map(|r| {
                let b = &r.report.bracket;
                format!("{}: c = {:e} outside [{:e}, {:?}]", r.id, b.flux, b.lower, b.upper)
            });
        let constants = fitted(records)
            .into_iter()
            .find(|c| c.included > 0 && !c.constant.is_none_or(f64::is_finite))
            .map(|c| format!("{}: fitted constant {:?}", c.inequality.name(), c.constant));
        vec![
            Assertion::from_witness(
                "qualifying_instances",
                if any { None } else { first_reason },
                "at least one instance qualifies",
            ),
            Assertion::from_witness("growth_lemmas", growth, "no growth violations on qualifying instances"),
            Assertion::from_witness("hopf_bound", hopf, "u_ν ≥ r_i/2 on qualifying instances"),
            Assertion::from_witness("flux_bracket", bracket, "c within its bracket whenever |∂ω| < 1"),
            Assertion::from_witness("fitted_constants", constants, "every fitted constant is finite"),
        ]
    }

    fn summary(&self, records: &[Record]) -> Value {
        json!({
            "instances": records.len(),
            "qualifying": qualifying(records).count(),
            "fitted_constants": fitted(records),
        })
    }
}
