//! Torsion energy of the outer shape, its Hadamard derivative and an area-preserving flow.
//!
//! Shapes move through radial Fourier velocities `ṙ(θ) = R(d + Σ a_k cos kθ + b_k sin kθ)`.
//! For such a field the normal flux element is `<ν, v> dS = ṙ r dθ`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{rho_e_rho_i, DomainSpec, FourierMode, GeometryError, QuadratureResolution, Quadratures};
use crate::identities::{compute_c, max_flux_deviation, IdentityError};
use crate::solver::{solve_dirichlet, Field, FieldModel, SolverError};
use crate::stability::{compute_z, pseudo_distance};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ShapeError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Identity(#[from] IdentityError),
    #[error("invalid shape-flow input: {0}")]
    InvalidInput(String),
}

/// Discretization used for every solve along the flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowSettings {
    pub n_src: usize,
    pub offset_ratio: f64,
    pub resolution: QuadratureResolution,
}

impl Default for FlowSettings {
    fn default() -> Self {
        Self { n_src: 128, offset_ratio: 1.5, resolution: QuadratureResolution::new(256, 32) }
    }
}

struct Solved {
    model: FieldModel,
    quads: Quadratures,
}

fn solve(spec: &DomainSpec, settings: &FlowSettings) -> Result<Solved, ShapeError> {
    let (model, _) = solve_dirichlet(spec, settings.n_src, settings.offset_ratio)?;
    let quads = Quadratures::build(spec, settings.resolution)?;
    Ok(Solved { model, quads })
}

fn energy_of(solved: &Solved) -> f64 {
    0.5 * solved.quads.area.integrate(|x| solved.model.gradient(x).norm_squared())
}

/// `I = ½∫|∇u|²` for the torsion function of `spec`.
pub fn energy(spec: &DomainSpec, settings: &FlowSettings) -> Result<f64, ShapeError> {
    Ok(energy_of(&solve(spec, settings)?))
}

/// Radial velocity in units of the outer radius.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VelocityField {
    pub dilation: f64,
    pub modes: Vec<FourierMode>,
}

impl VelocityField {
    pub fn cosine(k: u32) -> Self {
        Self { dilation: 0.0, modes: vec![FourierMode::cosine(k, 1.0)] }
    }

    pub fn sine(k: u32) -> Self {
        Self { dilation: 0.0, modes: vec![FourierMode::sine(k, 1.0)] }
    }

    /// `ṙ(θ)` on the outer curve of `spec`.
    pub fn radial(&self, spec: &DomainSpec, theta: f64) -> f64 {
        let shape: f64 = self
            .modes
            .iter()
            .map(|m| m.cos * (f64::from(m.k) * theta).cos() + m.sin * (f64::from(m.k) * theta).sin())
            .sum();
        spec.outer_radius() * (self.dilation + shape)
    }

    fn coefficient(&self, k: u32) -> (f64, f64) {
        self.modes.iter().find(|m| m.k == k).map_or((0.0, 0.0), |m| (m.cos, m.sin))
    }

    /// `∫ ṙ r dθ`, the rate of change of the enclosed area.
    pub fn area_rate(&self, spec: &DomainSpec) -> f64 {
        let r0 = spec.outer_radius();
        let overlap: f64 = spec
            .modes()
            .iter()
            .map(|m| {
                let (a, b) = self.coefficient(m.k);
                a * m.cos + b * m.sin
            })
            .sum();
        2.0 * PI * r0 * r0 * (self.dilation + 0.5 * overlap)
    }

    /// Removes the multiple `μ` of the shape's own radial profile that carries area;
    /// returns the projected field and `μ`.
    pub fn project_area_preserving(&self, spec: &DomainSpec) -> (Self, f64) {
        let r0 = spec.outer_radius();
        let norm =
            2.0 * PI * r0 * r0 * (1.0 + 0.5 * spec.modes().iter().map(|m| m.cos * m.cos + m.sin * m.sin).sum::<f64>());
        let mu = self.area_rate(spec) / norm;
        let mut projected = self.clone();
        projected.dilation -= mu;
        for m in spec.modes() {
            match projected.modes.iter_mut().find(|p| p.k == m.k) {
                Some(p) => {
                    p.cos -= mu * m.cos;
                    p.sin -= mu * m.sin;
                }
                None => projected.modes.push(FourierMode { k: m.k, cos: -mu * m.cos, sin: -mu * m.sin }),
            }
        }
        (projected, mu)
    }
}

/// The shape whose radius is `r + tṙ`; holes are carried unchanged.
pub fn perturbed(spec: &DomainSpec, velocity: &VelocityField, t: f64) -> Result<DomainSpec, GeometryError> {
    let scale = 1.0 + t * velocity.dilation;
    let mut modes: Vec<FourierMode> = spec.modes().to_vec();
    for v in &velocity.modes {
        match modes.iter_mut().find(|m| m.k == v.k) {
            Some(m) => {
                m.cos += t * v.cos;
                m.sin += t * v.sin;
            }
            None => modes.push(FourierMode { k: v.k, cos: t * v.cos, sin: t * v.sin }),
        }
    }
    for m in &mut modes {
        m.cos /= scale;
        m.sin /= scale;
    }
    modes.retain(|m| m.cos != 0.0 || m.sin != 0.0);
    modes.sort_by_key(|m| m.k);
    DomainSpec::new(spec.outer_radius() * scale, modes, spec.holes().to_vec())
}

/// The same shape rescaled about the origin to enclose `area` (holes unchanged).
fn with_outer_area(spec: &DomainSpec, area: f64) -> Result<DomainSpec, GeometryError> {
    let r0 = (area / spec.outer_area()).sqrt() * spec.outer_radius();
    DomainSpec::new(r0, spec.modes().to_vec(), spec.holes().to_vec())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeGradient {
    pub k: u32,
    pub cos: f64,
    pub sin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeGradient {
    /// `½∫ u_ν² <ν, v> dS` for the projected field.
    pub value: f64,
    /// Multiple of the radial profile removed by the area projection.
    pub removed: f64,
    /// Derivatives along the projected basis fields `cos kθ`, `sin kθ`.
    pub modes: Vec<ModeGradient>,
}

fn derivative_along(spec: &DomainSpec, solved: &Solved, velocity: &VelocityField) -> f64 {
    let outer = solved.quads.boundary.outer();
    let dtheta = 2.0 * PI / outer.len() as f64;
    outer
        .params
        .iter()
        .zip(outer.nodes.iter().zip(&outer.normals))
        .map(|(&t, (x, nu))| {
            let flux = solved.model.gradient(*x).dot(nu);
            0.5 * flux * flux * velocity.radial(spec, t) * spec.radius(t) * dtheta
        })
        .sum()
}

/// Hadamard derivative of the energy along an area-preserving radial velocity.
pub fn shape_gradient(
    spec: &DomainSpec,
    velocity: &VelocityField,
    active_modes: u32,
    settings: &FlowSettings,
) -> Result<ShapeGradient, ShapeError> {
    let solved = solve(spec, settings)?;
    let (projected, removed) = velocity.project_area_preserving(spec);
    let value = derivative_along(spec, &solved, &projected);
    Ok(ShapeGradient { value, removed, modes: mode_gradients(spec, &solved, active_modes) })
}

fn mode_gradients(spec: &DomainSpec, solved: &Solved, active_modes: u32) -> Vec<ModeGradient> {
    let along = |v: VelocityField| derivative_along(spec, solved, &v.project_area_preserving(spec).0);
    (1..=active_modes)
        .map(|k| ModeGradient { k, cos: along(VelocityField::cosine(k)), sin: along(VelocityField::sine(k)) })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescentOptions {
    pub max_iters: usize,
    /// Stop once `std(u_ν)/mean(u_ν)` on the outer curve falls to this value.
    pub flux_tolerance: f64,
    /// Highest wavenumber the flow may excite.
    pub active_modes: u32,
    pub armijo: f64,
    pub max_halvings: usize,
    pub settings: FlowSettings,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self {
            max_iters: 200,
            flux_tolerance: 1e-3,
            active_modes: 12,
            armijo: 1e-4,
            max_halvings: 12,
            settings: FlowSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeState {
    pub iteration: usize,
    pub spec: DomainSpec,
    pub energy: f64,
    pub flux_mean: f64,
    pub flux_std: f64,
    pub radii_gap: f64,
    /// Flux constant `c` of the state.
    pub flux_constant: f64,
    /// `max_Γ |u_ν − c|`.
    pub max_flux_deviation: f64,
    pub pseudo_distance: f64,
    /// Relative change of the outer area since the start.
    pub area_drift: f64,
    /// Step that produced this state (0 for the initial one).
    pub step: f64,
    pub halvings: usize,
    /// Derivative of the energy along the ascent velocity at this state.
    pub slope: f64,
    /// `(θ, u_ν)` at the outer quadrature nodes.
    pub boundary_flux: Vec<(f64, f64)>,
    /// Derivatives along the area-preserving basis fields.
    pub gradient: Vec<ModeGradient>,
}

impl ShapeState {
    pub fn flux_ratio(&self) -> f64 {
        self.flux_std / self.flux_mean
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "reason")]
pub enum Termination {
    Converged,
    MaxIterations,
    Stalled,
    SolverFailure { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<ShapeState>,
    pub termination: Termination,
}

struct Snapshot {
    spec: DomainSpec,
    solved: Solved,
    energy: f64,
    /// `(θ, u_ν, |x'|)` at the outer nodes.
    samples: Vec<(f64, f64, f64)>,
    flux_mean: f64,
    flux_std: f64,
}

fn snapshot(spec: DomainSpec, settings: &FlowSettings) -> Result<Snapshot, ShapeError> {
    let solved = solve(&spec, settings)?;
    let energy = energy_of(&solved);
    let outer = solved.quads.boundary.outer();
    let samples: Vec<(f64, f64, f64)> = outer
        .params
        .iter()
        .zip(outer.nodes.iter().zip(&outer.normals))
        .map(|(&t, (x, nu))| (t, solved.model.gradient(*x).dot(nu), spec.frame(t).speed()))
        .collect();
    let length = outer.length();
    let flux_mean = outer.weights.iter().zip(&samples).map(|(w, s)| w * s.1).sum::<f64>() / length;
    let flux_var = outer.weights.iter().zip(&samples).map(|(w, s)| w * (s.1 - flux_mean).powi(2)).sum::<f64>() / length;
    Ok(Snapshot { spec, solved, energy, samples, flux_mean, flux_std: flux_var.sqrt() })
}

/// Radial Fourier velocity of the normal speed `u_ν² − avg`, truncated to the active modes.
fn ascent_velocity(snap: &Snapshot, active_modes: u32) -> (VelocityField, f64) {
    let n = snap.samples.len() as f64;
    let dtheta = 2.0 * PI / n;
    let squares: Vec<f64> = snap.samples.iter().map(|s| s.1 * s.1).collect();
    let length: f64 = snap.samples.iter().map(|s| s.2 * dtheta).sum();
    let avg = snap.samples.iter().zip(&squares).map(|(s, q)| q * s.2 * dtheta).sum::<f64>() / length;
    let r0 = snap.spec.outer_radius();
    let radial: Vec<(f64, f64)> =
        snap.samples.iter().zip(&squares).map(|(s, q)| (s.0, (q - avg) * s.2 / snap.spec.radius(s.0) / r0)).collect();
    let dilation = radial.iter().map(|r| r.1).sum::<f64>() / n;
    let modes = (1..=active_modes)
        .map(|k| {
            let kf = f64::from(k);
            let (c, s) =
                radial.iter().fold((0.0, 0.0), |(c, s), (t, v)| (c + v * (kf * t).cos(), s + v * (kf * t).sin()));
            FourierMode { k, cos: 2.0 * c / n, sin: 2.0 * s / n }
        })
        .collect();
    let peak = squares.iter().map(|q| (q - avg).abs()).fold(0.0, f64::max);
    (VelocityField { dilation, modes }, peak)
}

fn state(
    snap: &Snapshot,
    iteration: usize,
    area0: f64,
    step: f64,
    halvings: usize,
    active_modes: u32,
) -> Result<ShapeState, ShapeError> {
    let z = compute_z(&snap.spec, &snap.solved.model, &snap.solved.quads);
    let (rho_e, rho_i) = rho_e_rho_i(&snap.spec, z.point)?;
    let c = compute_c(&snap.spec, &snap.solved.model, &snap.solved.quads)?.value;
    Ok(ShapeState {
        iteration,
        spec: snap.spec.clone(),
        energy: snap.energy,
        flux_mean: snap.flux_mean,
        flux_std: snap.flux_std,
        radii_gap: rho_e - rho_i,
        flux_constant: c,
        max_flux_deviation: max_flux_deviation(&snap.solved.model, &snap.solved.quads, c),
        pseudo_distance: pseudo_distance(snap.solved.quads.boundary.outer(), z.point, c),
        area_drift: (snap.spec.outer_area() - area0) / area0,
        step,
        halvings,
        slope: derivative_along(&snap.spec, &snap.solved, &ascent_velocity(snap, active_modes).0),
        boundary_flux: snap.samples.iter().map(|s| (s.0, s.1)).collect(),
        gradient: mode_gradients(&snap.spec, &snap.solved, active_modes),
    })
}

/// Area-preserving ascent of the torsion energy with Armijo backtracking.
///
/// Each step moves the outer curve with normal speed `s·(u_ν² − avg)`, converted to a
/// radial velocity and truncated to the active modes, then rescales to the initial area.
/// A trial step is halved until the energy rises by the Armijo margin and the spread of
/// `u_ν` does not grow.
pub fn descend(initial: &DomainSpec, options: &DescentOptions) -> Result<Trajectory, ShapeError> {
    let amplitude: f64 = initial.modes().iter().map(|m| m.magnitude()).sum();
    if amplitude > 0.1 {
        return Err(ShapeError::InvalidInput(format!("sum of mode amplitudes must be at most 0.1, got {amplitude}")));
    }
    let settings = &options.settings;
    let area0 = initial.outer_area();
    let mut current = snapshot(initial.clone(), settings)?;
    let modes = options.active_modes;
    let mut states = vec![state(&current, 0, area0, 0.0, 0, modes)?];
    for iteration in 1..=options.max_iters {
        if current.flux_std / current.flux_mean <= options.flux_tolerance {
            return Ok(Trajectory { states, termination: Termination::Converged });
        }
        let (velocity, peak) = ascent_velocity(&current, options.active_modes);
        let slope = states.last().map_or(0.0, |s| s.slope);
        let mut step = 0.5 / peak;
        let mut accepted = None;
        for halvings in 0..=options.max_halvings {
            let trial = perturbed(&current.spec, &velocity, step).and_then(|s| with_outer_area(&s, area0));
            if let Ok(spec) = trial {
                match snapshot(spec, settings) {
                    Ok(next)
                        if next.energy >= current.energy + options.armijo * step * slope
                            && next.flux_std <= current.flux_std =>
                    {
                        accepted = Some((next, halvings));
                        break;
                    }
                    Ok(_) | Err(ShapeError::Geometry(_)) | Err(ShapeError::InvalidInput(_)) => {}
                    Err(e) => {
                        return Ok(Trajectory {
                            states,
                            termination: Termination::SolverFailure { message: e.to_string() },
                        })
                    }
                }
            }
            step *= 0.5;
        }
        let Some((next, halvings)) = accepted else {
            return Ok(Trajectory { states, termination: Termination::Stalled });
        };
        current = next;
        states.push(state(&current, iteration, area0, step, halvings, modes)?);
    }
    let termination = if current.flux_std / current.flux_mean <= options.flux_tolerance {
        Termination::Converged
    } else {
        Termination::MaxIterations
    };
    Ok(Trajectory { states, termination })
}
