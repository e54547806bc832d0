use serde::Serialize;
use serde_json::{json, Value};
use torsion_lab::geometry::{diameter, interior_sphere_radius, DomainSpec, Quadratures};
use torsion_lab::stability::{
    oscillation_bound_check, poincare_empirical, random_harmonic_fields, tube_gradient_bound, ExponentRegime,
    OscillationForm, OscillationOutcome, OscillationReport, PoincareExponents, PoincareReport,
};

use super::{instance_error, Case, Experiment};
use crate::config::ScenarioConfig;
use crate::report::Assertion;
use crate::tables::{column, Column, Table};
use crate::HarnessError;

pub(crate) struct Poincare;

#[derive(Debug, Clone, Serialize)]
pub(crate) struct OscillationRecord {
    pub field: usize,
    pub report: OscillationReport,
}

#[derive(Debug, Clone, Serialize)]
pub(crate) struct Record {
    pub id: String,
    pub axis_value: Option<f64>,
    pub spec: DomainSpec,
    pub interior_radius: f64,
    pub diameter: f64,
    pub poincare: Vec<PoincareReport>,
    pub oscillation: Vec<OscillationRecord>,
}

const POINCARE: &[Column] = &[
    column("instance", "-", "instance id"),
    column("r", "1", "exponent on the deviation"),
    column("p", "1", "exponent on the weighted gradient"),
    column("alpha", "1", "power of the boundary distance in the weight"),
    column("regime", "-", "sobolev or diagonal"),
    column("fields", "-", "harmonic fields tested"),
    column("min_ratio", "mixed", "smallest empirical ratio"),
    column("max_ratio", "mixed", "largest empirical ratio"),
    column("bound_mean_normalized", "mixed", "closed-form bound with the universal factor set to 1"),
    column("bound_anchored_normalized", "mixed", "same for functions vanishing at the anchor"),
];

const OSCILLATION: &[Column] = &[
    column("instance", "-", "instance id"),
    column("field", "-", "index of the harmonic field"),
    column("form", "-", "mean or refined"),
    column("exponent", "1", "L^p exponent"),
    column("gradient_bound", "mixed", "gradient bound G on the tube"),
    column("lambda", "mixed", "reference value subtracted inside the L^p norm"),
    column("oscillation", "mixed", "max − min on the outer curve"),
    column("deviation_norm", "mixed", "L^p norm of the deviation"),
    column("smallness_threshold", "mixed", "the bound applies when deviation_norm is below this"),
    column("bound", "mixed", "right side of the oscillation bound"),
    column("outcome", "-", "holds, violated or not_applicable"),
    column("margin", "mixed", "bound − oscillation; negative on a violation, empty when not applicable"),
];

impl Experiment for Poincare {
    type Record = Record;

    fn run_case(&self, config: &ScenarioConfig, case: &Case) -> Result<Record, HarnessError> {
        let spec = &case.spec;
        let err = |e: &dyn std::fmt::Display| instance_error(&case.id, e);
        let quads = Quadratures::build(spec, config.quadrature.resolution()).map_err(|e| err(&e))?;
        let ri = interior_sphere_radius(spec).map_err(|e| err(&e))?;
        let d = diameter(spec);
        let fields = random_harmonic_fields(spec, config.poincare.fields, config.seed);
        let poincare = config
            .poincare
            .triples
            .iter()
            .map(|t| {
                let e = PoincareExponents::new(2, t[0], t[1], t[2]).map_err(|e| err(&e))?;
                Ok(poincare_empirical(spec, &quads, &fields, e, ri, d))
            })
            .collect::<Result<Vec<_>, HarnessError>>()?;
        let p = config.poincare.oscillation_exponent;
        let mut oscillation = Vec::new();
        for (i, v) in fields.iter().enumerate() {
            let g = tube_gradient_bound(v, spec, ri);
            for form in [OscillationForm::Mean, OscillationForm::Refined { lambda: None }] {
                let report = oscillation_bound_check(v, spec, &quads, ri, p, g, form).map_err(|e| err(&e))?;
                oscillation.push(OscillationRecord { field: i, report });
            }
        }
        Ok(Record {
            id: case.id.clone(),
            axis_value: case.axis_value,
            spec: spec.clone(),
            interior_radius: ri,
            diameter: d,
            poincare,
            oscillation,
        })
    }

    fn tables(&self, records: &[Record]) -> Vec<Table> {
        let mut poincare = Table::new("poincare", POINCARE);
        let mut oscillation = Table::new("oscillation", OSCILLATION);
        for r in records {
            for p in &r.poincare {
                let e = p.exponents;
                let regime = match e.regime {
                    ExponentRegime::Sobolev => "sobolev",
                    ExponentRegime::Diagonal => "diagonal",
                };
                let min = p.ratios.iter().copied().reduce(f64::min);
                poincare.push(vec![
                    r.id.as_str().into(),
                    e.r.into(),
                    e.p.into(),
                    e.alpha.into(),
                    regime.into(),
                    p.ratios.len().into(),
                    min.into(),
                    p.max_ratio.into(),
                    p.bound.mean_normalized.into(),
                    p.bound.anchored_normalized.into(),
                ]);
            }
            for o in &r.oscillation {
                let rep = &o.report;
                let form = match rep.form {
                    OscillationForm::Mean => "mean",
                    OscillationForm::Refined { .. } => "refined",
                };
                let (outcome, margin) = match rep.outcome {
                    OscillationOutcome::Holds { slack } => ("holds", Some(slack)),
                    OscillationOutcome::Violated { excess } => ("violated", Some(-excess)),
                    OscillationOutcome::NotApplicable => ("not_applicable", None),
                };
                oscillation.push(vec![
                    r.id.as_str().into(),
                    o.field.into(),
                    form.into(),
                    rep.exponent.into(),
                    rep.gradient_bound.into(),
                    rep.lambda.into(),
                    rep.oscillation.into(),
                    rep.deviation_norm.into(),
                    rep.smallness_threshold.into(),
                    rep.bound.into(),
                    outcome.into(),
                    margin.into(),
                ]);
            }
        }
        vec![poincare, oscillation]
    }

    fn assertions(&self, _config: &ScenarioConfig, records: &[Record]) -> Vec<Assertion> {
        let violation = records.iter().find_map(|r| {
            r.oscillation.iter().find_map(|o| match o.report.outcome {
                OscillationOutcome::Violated { excess } => Some(format!(
                    "{}: field {} ({:?}) oscillation {:e} exceeds the bound by {excess:e}",
                    r.id, o.field, o.report.form, o.report.oscillation
                )),
                _ => None,
            })
        });
        let ratio = records.iter().find_map(|r| {
            r.poincare.iter().find_map(|p| {
                p.ratios.iter().position(|x| !(x.is_finite() && *x >= 0.0)).map(|i| {
                    format!(
                        "{}: (r, p, α) = ({}, {}, {}) field {i} ratio {}",
                        r.id, p.exponents.r, p.exponents.p, p.exponents.alpha, p.ratios[i]
                    )
                })
            })
        });
        vec![
            Assertion::from_witness("oscillation_lemma", violation, "no oscillation bound is violated"),
            Assertion::from_witness("poincare_ratios", ratio, "every empirical ratio is finite and nonnegative"),
        ]
    }

    fn summary(&self, records: &[Record]) -> Value {
        let count = |pred: fn(&OscillationOutcome) -> bool| {
            records.iter().flat_map(|r| &r.oscillation).filter(|o| pred(&o.report.outcome)).count()
        };
        json!({
            "instances": records.len(),
            "oscillation_checks": records.iter().map(|r| r.oscillation.len()).sum::<usize>(),
            "holds": count(|o| matches!(o, OscillationOutcome::Holds { .. })),
            "not_applicable": count(|o| matches!(o, OscillationOutcome::NotApplicable)),
            "violated": count(|o| matches!(o, OscillationOutcome::Violated { .. })),
        })
    }
}
