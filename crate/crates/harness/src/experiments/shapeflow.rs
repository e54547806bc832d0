use serde::Serialize;
use serde_json::{json, Value};
use torsion_lab::shapeflow::{descend, Termination, Trajectory};

use super::{instance_error, Case, Experiment};
use crate::config::ScenarioConfig;
use crate::report::Assertion;
use crate::tables::{column, Column, Table};
use crate::HarnessError;

pub(crate) struct Shapeflow;

#[derive(Debug, Clone, Serialize)]
pub(crate) struct Record {
    pub id: String,
    pub axis_value: Option<f64>,
    pub trajectory: Trajectory,
}

const TRAJECTORY: &[Column] = &[
    column("instance", "-", "instance id"),
    column("iteration", "-", "accepted step count"),
    column("energy_du4", "du^4", "torsional energy ½∫|∇u|²"),
    column("flux_mean_du", "du", "mean of u_ν over the outer curve"),
    column("flux_std_du", "du", "standard deviation of u_ν over the outer curve"),
    column("flux_ratio", "1", "flux_std / flux_mean"),
    column("radii_gap_du", "du", "rho_e − rho_i about the center point"),
    column("flux_constant_du", "du", "flux constant c"),
    column("max_flux_deviation_du", "du", "max |u_ν − c|"),
    column("pseudo_distance_du3", "du^3", "D² about the center point"),
    column("area_drift", "1", "relative change of the enclosed area"),
    column("step", "1", "accepted step in flow time"),
    column("halvings", "-", "step halvings before acceptance"),
    column("slope_du4", "du^4", "energy derivative along the step direction"),
];

const BOUNDARY_FLUX: &[Column] = &[
    column("instance", "-", "instance id"),
    column("iteration", "-", "accepted step count"),
    column("theta_rad", "rad", "polar parameter of the outer node"),
    column("flux_du", "du", "u_ν at that node"),
];

const SHAPES: &[Column] = &[
    column("instance", "-", "instance id"),
    column("iteration", "-", "accepted step count"),
    column("outer_radius_du", "du", "base radius R of r(θ) = R(1 + Σ ε_k cos/sin kθ)"),
    column("k", "-", "Fourier index, 0 for the base radius row"),
    column("cos", "1", "cosine amplitude"),
    column("sin", "1", "sine amplitude"),
];

fn monotone(values: impl Iterator<Item = f64>, increasing: bool) -> Option<(usize, f64, f64)> {
    let values: Vec<f64> = values.collect();
    values.windows(2).enumerate().find_map(|(i, w)| {
        let bad = if increasing { w[1] < w[0] } else { w[1] > w[0] };
        bad.then_some((i + 1, w[0], w[1]))
    })
}

impl Experiment for Shapeflow {
    type Record = Record;

    fn run_case(&self, config: &ScenarioConfig, case: &Case) -> Result<Record, HarnessError> {
        let trajectory = descend(&case.spec, &config.descent_options()).map_err(|e| instance_error(&case.id, e))?;
        Ok(Record { id: case.id.clone(), axis_value: case.axis_value, trajectory })
    }

    fn tables(&self, records: &[Record]) -> Vec<Table> {
        let mut trajectory = Table::new("trajectory", TRAJECTORY);
        let mut flux = Table::new("boundary_flux", BOUNDARY_FLUX);
        let mut shapes = Table::new("shapes", SHAPES);
        for r in records {
            for s in &r.trajectory.states {
                trajectory.push(vec![
                    r.id.as_str().into(),
                    s.iteration.into(),
                    s.energy.into(),
                    s.flux_mean.into(),
                    s.flux_std.into(),
                    s.flux_ratio().into(),
                    s.radii_gap.into(),
                    s.flux_constant.into(),
                    s.max_flux_deviation.into(),
                    s.pseudo_distance.into(),
                    s.area_drift.into(),
                    s.step.into(),
                    s.halvings.into(),
                    s.slope.into(),
                ]);
                for &(theta, u_nu) in &s.boundary_flux {
                    flux.push(vec![r.id.as_str().into(), s.iteration.into(), theta.into(), u_nu.into()]);
                }
                let radius = s.spec.outer_radius();
                shapes.push(vec![
                    r.id.as_str().into(),
                    s.iteration.into(),
                    radius.into(),
                    0u32.into(),
                    0.0.into(),
                    0.0.into(),
                ]);
                for m in s.spec.modes() {
                    shapes.push(vec![
                        r.id.as_str().into(),
                        s.iteration.into(),
                        radius.into(),
                        m.k.into(),
                        m.cos.into(),
                        m.sin.into(),
                    ]);
                }
            }
        }
        vec![trajectory, flux, shapes]
    }

    fn assertions(&self, config: &ScenarioConfig, records: &[Record]) -> Vec<Assertion> {
        let tolerance = config.tolerances.area_drift;
        let unconverged = records.iter().find(|r| r.trajectory.termination != Termination::Converged).map(|r| {
            let last = r.trajectory.states.last();
            format!(
                "{}: stopped with {:?} at iteration {} (flux ratio {:e})",
                r.id,
                r.trajectory.termination,
                last.map_or(0, |s| s.iteration),
                last.map_or(f64::NAN, |s| s.flux_ratio())
            )
        });
        let energy = records.iter().find_map(|r| {
            monotone(r.trajectory.states.iter().map(|s| s.energy), true)
                .map(|(i, a, b)| format!("{}: energy fell from {a:e} to {b:e} at iteration {i}", r.id))
        });
        let spread = records.iter().find_map(|r| {
            monotone(r.trajectory.states.iter().map(|s| s.flux_std), false)
                .map(|(i, a, b)| format!("{}: std(u_ν) rose from {a:e} to {b:e} at iteration {i}", r.id))
        });
        let drift = records.iter().find_map(|r| {
            r.trajectory
                .states
                .iter()
                .find(|s| !(s.area_drift.abs() <= tolerance))
                .map(|s| format!("{}: area drift {:e} at iteration {}", r.id, s.area_drift, s.iteration))
        });
        vec![
            Assertion::from_witness("flow_converged", unconverged, "every flow reached the flux tolerance"),
            Assertion::from_witness("energy_monotone", energy, "energy never decreases over accepted steps"),
            Assertion::from_witness("flux_spread_monotone", spread, "std(u_ν) never increases over accepted steps"),
            Assertion::from_witness("area_drift", drift, format!("|area drift| ≤ {tolerance:e}")),
        ]
    }

    fn summary(&self, records: &[Record]) -> Value {
        let runs: Vec<Value> = records
            .iter()
            .map(|r| {
                let last = r.trajectory.states.last();
                json!({
                    "instance": r.id,
                    "termination": r.trajectory.termination,
                    "iterations": last.map(|s| s.iteration),
                    "final_flux_ratio": last.map(|s| s.flux_ratio()),
                    "final_radii_gap": last.map(|s| s.radii_gap),
                    "final_area_drift": last.map(|s| s.area_drift),
                })
            })
            .collect();
        json!({ "instances": records.len(), "runs": runs })
    }
}
