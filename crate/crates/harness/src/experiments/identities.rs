use serde::Serialize;
use serde_json::{json, Value};
use torsion_lab::geometry::{DomainSpec, Quadratures};
use torsion_lab::identities::{
    check_divergence, check_fundamental, check_overdetermined, check_pohozaev, compute_c, flux_balance,
    max_flux_deviation, FluxConstant, IdentityId, IdentityReport, OverdeterminedCheck,
};

use super::{build_field, instance_error, Case, Experiment, FieldSource};
use crate::config::ScenarioConfig;
use crate::report::Assertion;
use crate::tables::{column, Cell, Column, Table};
use crate::HarnessError;

pub(crate) struct Identities;

/// One identity at the configured and at the doubled resolution.
#[derive(Debug, Clone, Serialize)]
pub(crate) struct Check {
    pub report: IdentityReport,
    pub doubled: Option<IdentityReport>,
}

#[derive(Debug, Clone, Serialize)]
pub(crate) struct Record {
    pub id: String,
    pub axis_value: Option<f64>,
    pub spec: DomainSpec,
    pub field: FieldSource,
    pub checks: Vec<Check>,
    pub flux_constant: Option<FluxConstant>,
    /// Set when the two flux estimates disagree.
    pub flux_error: Option<String>,
    pub max_flux_deviation: Option<f64>,
    /// Present only when the outer flux is constant to the tolerance.
    pub overdetermined: Option<OverdeterminedCheck>,
}

const COLUMNS: &[Column] = &[
    column("instance", "-", "instance id"),
    column("axis_value", "axis", "sweep value, empty for a single run"),
    column("identity", "-", "identity name"),
    column("lhs", "varies", "left side; units depend on the identity"),
    column("rhs", "varies", "right side, same units as lhs"),
    column("abs_residual", "varies", "|lhs − rhs|"),
    column("rel_residual", "1", "|lhs − rhs| / max(|lhs|, |rhs|, tiny)"),
    column("rel_residual_doubled", "1", "rel_residual with both quadrature resolutions doubled"),
    column("refinement_ratio", "1", "rel_residual / rel_residual_doubled"),
];

fn name(id: IdentityId) -> &'static str {
    match id {
        IdentityId::Pohozaev => "pohozaev",
        IdentityId::Fundamental => "fundamental",
        IdentityId::Overdetermined => "overdetermined",
        IdentityId::ValueC => "flux_balance",
        IdentityId::DivergenceX => "divergence",
    }
}

impl Experiment for Identities {
    type Record = Record;

    fn run_case(&self, config: &ScenarioConfig, case: &Case) -> Result<Record, HarnessError> {
        let (field, source) = build_field(config, case)?;
        let field = field.as_ref();
        let resolution = config.quadrature.resolution();
        let quads = Quadratures::build(&case.spec, resolution).map_err(|e| instance_error(&case.id, e))?;
        let fine = Quadratures::build(&case.spec, resolution.doubled()).map_err(|e| instance_error(&case.id, e))?;
        let both = |check: fn(&dyn torsion_lab::solver::Field, &Quadratures) -> IdentityReport| Check {
            report: check(field, &quads),
            doubled: Some(check(field, &fine)),
        };
        let mut checks = vec![
            both(check_pohozaev),
            both(check_fundamental),
            Check { report: check_divergence(&case.spec, &quads), doubled: Some(check_divergence(&case.spec, &fine)) },
            Check {
                report: flux_balance(field, &case.spec, &quads),
                doubled: Some(flux_balance(field, &case.spec, &fine)),
            },
        ];
        let (flux_constant, flux_error) = match compute_c(&case.spec, field, &quads) {
            Ok(c) => (Some(c), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let tolerance = config.tolerances.overdetermination;
        let max_deviation = flux_constant.map(|c| max_flux_deviation(field, &quads, c.value));
        let overdetermined = flux_constant
            .filter(|_| max_deviation.is_some_and(|d| d <= tolerance))
            .map(|c| check_overdetermined(field, &case.spec, c.value, &quads, tolerance))
            .transpose()
            .map_err(|e| instance_error(&case.id, e))?;
        if let Some(o) = &overdetermined {
            let doubled = flux_constant
                .and_then(|c| check_overdetermined(field, &case.spec, c.value, &fine, tolerance).ok())
                .map(|o| o.identity);
            checks.push(Check { report: o.identity.clone(), doubled });
        }
        Ok(Record {
            id: case.id.clone(),
            axis_value: case.axis_value,
            spec: case.spec.clone(),
            field: source,
            checks,
            flux_constant,
            flux_error,
            max_flux_deviation: max_deviation,
            overdetermined,
        })
    }

    fn tables(&self, records: &[Record]) -> Vec<Table> {
        let mut table = Table::new("identities", COLUMNS);
        for r in records {
            for c in &r.checks {
                let doubled = c.doubled.as_ref().map(|d| d.rel_residual);
                let ratio = doubled.filter(|d| *d > 0.0).map(|d| c.report.rel_residual / d);
                table.push(vec![
                    r.id.as_str().into(),
                    r.axis_value.into(),
                    name(c.report.id).into(),
                    c.report.lhs.into(),
                    c.report.rhs.into(),
                    c.report.abs_residual.into(),
                    c.report.rel_residual.into(),
                    doubled.into(),
                    Cell::from(ratio),
                ]);
            }
        }
        vec![table]
    }

    fn assertions(&self, config: &ScenarioConfig, records: &[Record]) -> Vec<Assertion> {
        let tolerance = config.tolerances.identity_rel_residual;
        let unsolved = records
            .iter()
            .find(|r| !r.field.converged())
            .map(|r| format!("{}: boundary residual {:e} above the solver tolerance", r.id, r.field.residual()));
        let residual = records.iter().find_map(|r| {
            r.checks.iter().find(|c| !(c.report.rel_residual <= tolerance)).map(|c| {
                format!(
                    "{}: {} rel_residual {:e} > {tolerance:e} (lhs {:e}, rhs {:e})",
                    r.id,
                    name(c.report.id),
                    c.report.rel_residual,
                    c.report.lhs,
                    c.report.rhs
                )
            })
        });
        let flux = records.iter().find_map(|r| r.flux_error.as_ref().map(|e| format!("{}: {e}", r.id)));
        vec![
            Assertion::from_witness("solves_converged", unsolved, "every field solve met its residual tolerance"),
            Assertion::from_witness("identity_residuals", residual, format!("every rel_residual ≤ {tolerance:e}")),
            Assertion::from_witness("flux_constant", flux, "both flux estimates agree"),
        ]
    }

    fn summary(&self, records: &[Record]) -> Value {
        let max = |id: IdentityId| {
            records
                .iter()
                .flat_map(|r| r.checks.iter().filter(move |c| c.report.id == id))
                .map(|c| c.report.rel_residual)
                .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
        };
        json!({
            "instances": records.len(),
            "max_rel_residual": {
                "pohozaev": max(IdentityId::Pohozaev),
                "fundamental": max(IdentityId::Fundamental),
                "divergence": max(IdentityId::DivergenceX),
                "flux_balance": max(IdentityId::ValueC),
                "overdetermined": max(IdentityId::Overdetermined),
            },
            "overdetermined_instances": records.iter().filter(|r| r.overdetermined.is_some()).count(),
        })
    }
}
