//! One runner per experiment kind.

mod identities;
mod poincare;
mod shapeflow;
mod stability;

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;
use torsion_lab::geometry::DomainSpec;
use torsion_lab::solver::{
    radial_reference, solve_cauchy, solve_dirichlet, Field, FieldModel, SolveDiagnostics, SolverError,
};

use crate::config::{Continuation, ExperimentKind, FieldMethod, ScenarioConfig};
use crate::report::Assertion;
use crate::tables::{Cell, Table};
use crate::HarnessError;

/// A domain to evaluate, tagged with its position in the sweep.
pub(crate) struct Case {
    pub id: String,
    pub axis_value: Option<f64>,
    pub spec: DomainSpec,
}

pub(crate) trait Experiment: Sync {
    type Record: Serialize + Send;

    fn run_case(&self, config: &ScenarioConfig, case: &Case) -> Result<Self::Record, HarnessError>;
    fn tables(&self, records: &[Self::Record]) -> Vec<Table>;
    fn assertions(&self, config: &ScenarioConfig, records: &[Self::Record]) -> Vec<Assertion>;
    fn summary(&self, records: &[Self::Record]) -> Value;
}

pub(crate) struct Output {
    pub instances: Value,
    pub summary: Value,
    pub assertions: Vec<Assertion>,
    pub tables: Vec<Table>,
}

pub(crate) fn run(config: &ScenarioConfig, swept: bool) -> Result<Output, HarnessError> {
    match config.experiment {
        ExperimentKind::Identities => drive(&identities::Identities, config, swept),
        ExperimentKind::Stability | ExperimentKind::CauchyStability => drive(&stability::Stability, config, swept),
        ExperimentKind::Shapeflow => drive(&shapeflow::Shapeflow, config, swept),
        ExperimentKind::Poincare => drive(&poincare::Poincare, config, swept),
    }
}

fn drive<E: Experiment>(experiment: &E, config: &ScenarioConfig, swept: bool) -> Result<Output, HarnessError> {
    let cases = config
        .axis_values(swept)
        .into_iter()
        .enumerate()
        .map(|(index, axis_value)| {
            Ok(Case {
                id: format!("{}-{index:03}", config.experiment.name()),
                axis_value,
                spec: config.domain_spec(axis_value)?,
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let records = cases.par_iter().map(|case| experiment.run_case(config, case)).collect::<Result<Vec<_>, _>>()?;
    let tables = experiment.tables(&records);
    let mut assertions = experiment.assertions(config, &records);
    assertions.push(finite_tables(&tables));
    let instances = serde_json::to_value(&records)
        .map_err(|e| HarnessError::Instance { id: "report".into(), message: e.to_string() })?;
    Ok(Output { instances, summary: experiment.summary(&records), assertions, tables })
}

fn finite_tables(tables: &[Table]) -> Assertion {
    let witness = tables.iter().find_map(|t| {
        t.rows.iter().enumerate().find_map(|(i, row)| {
            row.iter().zip(t.columns).find_map(|(cell, col)| match cell {
                Cell::Float(v) if !v.is_finite() => Some(format!("{}.csv row {i} column {} is {v}", t.name, col.name)),
                _ => None,
            })
        })
    });
    Assertion::from_witness("finite_outputs", witness, "every table value is finite")
}

/// Where the field of an instance came from.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub(crate) enum FieldSource {
    ClosedForm { outer_radius: f64 },
    Dirichlet { converged: bool, diagnostics: SolveDiagnostics, model: FieldModel },
    Cauchy { continuation: Continuation, converged: bool, diagnostics: SolveDiagnostics, model: FieldModel },
}

impl FieldSource {
    pub fn converged(&self) -> bool {
        match self {
            FieldSource::ClosedForm { .. } => true,
            FieldSource::Dirichlet { converged, .. } | FieldSource::Cauchy { converged, .. } => *converged,
        }
    }

    /// Largest boundary residual of the solve; zero for the closed form.
    pub fn residual(&self) -> f64 {
        match self {
            FieldSource::ClosedForm { .. } => 0.0,
            FieldSource::Dirichlet { diagnostics, .. } | FieldSource::Cauchy { diagnostics, .. } => {
                diagnostics.max_residual()
            }
        }
    }
}

/// Accepts a solve that missed its residual tolerance, flagged as unconverged.
fn keep_failed(
    result: Result<(FieldModel, SolveDiagnostics), SolverError>,
    id: &str,
) -> Result<(FieldModel, SolveDiagnostics, bool), HarnessError> {
    match result {
        Ok((model, diagnostics)) => Ok((model, diagnostics, true)),
        Err(SolverError::NotConverged(failed) | SolverError::ContinuationFailed(failed)) => {
            Ok((failed.model, failed.diagnostics, false))
        }
        Err(e) => Err(HarnessError::Instance { id: id.to_string(), message: e.to_string() }),
    }
}

/// The solution field the scenario asks for on `case`.
pub(crate) fn build_field(config: &ScenarioConfig, case: &Case) -> Result<(Arc<dyn Field>, FieldSource), HarnessError> {
    let solver = &config.solver;
    if config.experiment == ExperimentKind::CauchyStability {
        let host = match solver.continuation {
            Continuation::HoleHosted => case.spec.clone(),
            Continuation::Carved => case.spec.without_holes(),
        };
        let (model, diagnostics, converged) =
            keep_failed(solve_cauchy(&host, solver.flux_du, solver.cauchy_options()), &case.id)?;
        let field = Arc::new(model.clone());
        return Ok((field, FieldSource::Cauchy { continuation: solver.continuation, converged, diagnostics, model }));
    }
    match solver.method {
        FieldMethod::ClosedForm => {
            let r = case.spec.outer_radius();
            Ok((Arc::new(radial_reference(r, 2)), FieldSource::ClosedForm { outer_radius: r }))
        }
        FieldMethod::Dirichlet => {
            let (model, diagnostics, converged) =
                keep_failed(solve_dirichlet(&case.spec, solver.n_src, solver.offset_ratio), &case.id)?;
            let field = Arc::new(model.clone());
            Ok((field, FieldSource::Dirichlet { converged, diagnostics, model }))
        }
    }
}

pub(crate) fn instance_error(id: &str, e: impl ToString) -> HarnessError {
    HarnessError::Instance { id: id.to_string(), message: e.to_string() }
}
