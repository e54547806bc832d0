//! Scenario files: a TOML key tree whose length-valued keys end in `_du` (domain units)
//! and whose `u`-valued keys end in `_du2`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use torsion_lab::geometry::{DomainSpec, FourierMode, GeometryError, Hole, QuadratureResolution};
use torsion_lab::shapeflow::{DescentOptions, FlowSettings};
use torsion_lab::solver::CauchyOptions;
use torsion_lab::stability::{PoincareExponents, Regime, SuiteOptions};
use torsion_lab::Point;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

impl ConfigError {
    fn invalid(path: impl Into<String>, message: impl ToString) -> Self {
        ConfigError::Invalid { path: path.into(), message: message.to_string() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Identities,
    Stability,
    CauchyStability,
    Shapeflow,
    Poincare,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Identities => "identities",
            ExperimentKind::Stability => "stability",
            ExperimentKind::CauchyStability => "cauchy-stability",
            ExperimentKind::Shapeflow => "shapeflow",
            ExperimentKind::Poincare => "poincare",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub domain: DomainConfig,
    #[serde(default)]
    pub holes: Vec<HoleConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub stability: StabilityConfig,
    #[serde(default)]
    pub shapeflow: ShapeflowConfig,
    #[serde(default)]
    pub poincare: PoincareConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub outer_radius_du: f64,
    #[serde(default)]
    pub modes: Vec<ModeConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    pub k: u32,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoleConfig {
    pub center_du: [f64; 2],
    pub radius_du: f64,
    /// Required for Dirichlet solves; derived for the closed form; unused by continuation.
    #[serde(default)]
    pub boundary_value_du2: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldMethod {
    Dirichlet,
    /// `(|x|² − R²)/4` on a disk with concentric holes; no solve.
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Continuation {
    /// Interior sources inside the holes.
    HoleHosted,
    /// Continue on the hole-free shape, then restrict to the perforated region.
    Carved,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub method: FieldMethod,
    pub n_src: usize,
    pub offset_ratio: f64,
    pub tikhonov: f64,
    pub outer_offset_ratio: f64,
    pub inner_offset_ratio: f64,
    /// Prescribed boundary flux for continuation.
    pub flux_du: f64,
    pub continuation: Continuation,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let cauchy = CauchyOptions::default();
        Self {
            method: FieldMethod::Dirichlet,
            n_src: 128,
            offset_ratio: 1.5,
            tikhonov: cauchy.tikhonov,
            outer_offset_ratio: cauchy.outer_offset,
            inner_offset_ratio: cauchy.inner_offset,
            flux_du: 0.5,
            continuation: Continuation::HoleHosted,
        }
    }
}

impl SolverConfig {
    pub fn cauchy_options(&self) -> CauchyOptions {
        CauchyOptions {
            n_src_per_ring: self.n_src,
            outer_offset: self.outer_offset_ratio,
            inner_offset: self.inner_offset_ratio,
            tikhonov: self.tikhonov,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureConfig {
    pub n_theta: usize,
    pub n_r: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { n_theta: 256, n_r: 32 }
    }
}

impl QuadratureConfig {
    pub fn resolution(&self) -> QuadratureResolution {
        QuadratureResolution::new(self.n_theta, self.n_r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    #[serde(rename = "hole_radius_du")]
    HoleRadius,
    #[serde(rename = "hole_center_x_du")]
    HoleCenterX,
    #[serde(rename = "hole_value_du2")]
    HoleValue,
    #[serde(rename = "mode_amplitude")]
    ModeAmplitude,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::HoleRadius => "hole_radius_du",
            SweepAxis::HoleCenterX => "hole_center_x_du",
            SweepAxis::HoleValue => "hole_value_du2",
            SweepAxis::ModeAmplitude => "mode_amplitude",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    /// Which hole or mode the axis refers to.
    #[serde(default)]
    pub index: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub identity_rel_residual: f64,
    pub overdetermination: f64,
    pub area_drift: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { identity_rel_residual: 1e-4, overdetermination: 1e-6, area_drift: 1e-5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilityConfig {
    pub regime: Regime,
    pub theta: Option<f64>,
    pub growth_samples: usize,
    pub waive_overdetermination: bool,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        let d = SuiteOptions::default();
        Self { regime: d.regime, theta: d.theta, growth_samples: d.growth_samples, waive_overdetermination: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShapeflowConfig {
    pub max_iters: usize,
    pub flux_tolerance: f64,
    pub active_modes: u32,
    pub armijo: f64,
    pub max_halvings: usize,
}

impl Default for ShapeflowConfig {
    fn default() -> Self {
        let d = DescentOptions::default();
        Self {
            max_iters: d.max_iters,
            flux_tolerance: d.flux_tolerance,
            active_modes: d.active_modes,
            armijo: d.armijo,
            max_halvings: d.max_halvings,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PoincareConfig {
    /// `(r, p, α)` triples.
    pub triples: Vec<[f64; 3]>,
    pub fields: usize,
    pub oscillation_exponent: f64,
}

impl Default for PoincareConfig {
    fn default() -> Self {
        Self { triples: vec![[2.0, 2.0, 0.5], [2.0, 2.0, 0.0], [2.0, 2.0, 1.0]], fields: 20, oscillation_exponent: 2.0 }
    }
}

/// Parses a scenario, reporting the offending key path on failure.
pub fn parse(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let de = toml::Deserializer::parse(text)
        .map_err(|e| ConfigError::Parse { path: "<document>".into(), message: e.to_string() })?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::Parse { path, message: e.into_inner().message().to_string() }
    })
}

pub fn load(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
    let config = parse(&text)?;
    config.validate()?;
    Ok(config)
}

fn finite(path: &str, value: f64) -> Result<(), ConfigError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::invalid(path, format!("must be finite, got {value}")))
    }
}

/// Scenario key that a domain invariant refers to.
fn domain_error_path(e: &GeometryError) -> String {
    let GeometryError::InvalidDomain { detail, .. } = e else {
        return "domain".into();
    };
    if let Some(rest) = detail.strip_prefix("hole ") {
        let index: String = rest.chars().take_while(char::is_ascii_digit).collect();
        if !index.is_empty() {
            return format!("holes[{index}]");
        }
    }
    if detail.starts_with("holes ") {
        "holes".into()
    } else if detail.starts_with("k =") {
        "domain.modes".into()
    } else {
        "domain".into()
    }
}

impl ScenarioConfig {
    /// Sweep values, or a single `None` for an unswept run.
    pub fn axis_values(&self, swept: bool) -> Vec<Option<f64>> {
        match (&self.sweep, swept) {
            (Some(s), true) => s.values.iter().map(|v| Some(*v)).collect(),
            _ => vec![None],
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        finite("domain.outer_radius_du", self.domain.outer_radius_du)?;
        for (i, m) in self.domain.modes.iter().enumerate() {
            finite(&format!("domain.modes[{i}].cos"), m.cos)?;
            finite(&format!("domain.modes[{i}].sin"), m.sin)?;
        }
        for (i, h) in self.holes.iter().enumerate() {
            finite(&format!("holes[{i}].radius_du"), h.radius_du)?;
            finite(&format!("holes[{i}].center_du"), h.center_du[0] + h.center_du[1])?;
            if self.needs_hole_values() && h.boundary_value_du2.is_none() {
                return Err(ConfigError::invalid(
                    format!("holes[{i}].boundary_value_du2"),
                    "required by the Dirichlet solve",
                ));
            }
        }
        if self.quadrature.n_theta < 8 || self.quadrature.n_r < 2 {
            return Err(ConfigError::invalid("quadrature", "need n_theta ≥ 8 and n_r ≥ 2"));
        }
        let s = &self.solver;
        if s.n_src < 32 {
            return Err(ConfigError::invalid("solver.n_src", format!("must be at least 32, got {}", s.n_src)));
        }
        if !(1.1..=3.0).contains(&s.offset_ratio) {
            return Err(ConfigError::invalid(
                "solver.offset_ratio",
                format!("must lie in [1.1, 3], got {}", s.offset_ratio),
            ));
        }
        if !(s.tikhonov >= 0.0 && s.tikhonov.is_finite()) {
            return Err(ConfigError::invalid("solver.tikhonov", "must be finite and nonnegative"));
        }
        if !(s.inner_offset_ratio > 1.0 && s.outer_offset_ratio > 1.0) {
            return Err(ConfigError::invalid("solver", "continuation offsets must exceed 1"));
        }
        finite("solver.flux_du", s.flux_du)?;
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(ConfigError::invalid("sweep.values", "must not be empty"));
            }
            if sweep.values.iter().any(|v| !v.is_finite()) {
                return Err(ConfigError::invalid("sweep.values", "must be finite"));
            }
            if sweep.values.windows(2).any(|w| w[1] <= w[0]) {
                return Err(ConfigError::invalid("sweep.values", "must be strictly increasing"));
            }
            let targets = match sweep.axis {
                SweepAxis::ModeAmplitude => self.domain.modes.len(),
                _ => self.holes.len(),
            };
            if sweep.index >= targets {
                return Err(ConfigError::invalid(
                    "sweep.index",
                    format!("{} has no entry {}", sweep.axis.name(), sweep.index),
                ));
            }
        }
        if self.experiment == ExperimentKind::Poincare {
            for (i, t) in self.poincare.triples.iter().enumerate() {
                PoincareExponents::new(2, t[0], t[1], t[2])
                    .map_err(|e| ConfigError::invalid(format!("poincare.triples[{i}]"), e))?;
            }
            if !(self.poincare.oscillation_exponent >= 1.0) {
                return Err(ConfigError::invalid("poincare.oscillation_exponent", "must be at least 1"));
            }
        }
        if self.stability.regime == Regime::JohnRelaxed
            && !matches!(self.stability.theta, Some(t) if t > 0.0 && t < 1.0)
        {
            return Err(ConfigError::invalid(
                "stability.theta",
                "the john-relaxed regime in the plane needs θ in (0, 1)",
            ));
        }
        let values = self.sweep.as_ref().map_or_else(Vec::new, |s| s.values.clone());
        for value in std::iter::once(None).chain(values.into_iter().map(Some)) {
            let spec = self.domain_spec(value)?;
            let amplitude: f64 = spec.modes().iter().map(|m| m.magnitude()).sum();
            if self.experiment == ExperimentKind::Shapeflow && amplitude > 0.1 {
                return Err(ConfigError::invalid(
                    "domain.modes",
                    format!("the flow needs Σ|ε_k| ≤ 0.1, got {amplitude}"),
                ));
            }
        }
        Ok(())
    }

    fn needs_hole_values(&self) -> bool {
        self.solver.method == FieldMethod::Dirichlet
            && matches!(self.experiment, ExperimentKind::Identities | ExperimentKind::Stability)
    }

    /// Uses the closed-form radial field.
    pub fn closed_form(&self) -> bool {
        self.solver.method == FieldMethod::ClosedForm
            && matches!(self.experiment, ExperimentKind::Identities | ExperimentKind::Stability)
    }

    /// The domain with the sweep value applied.
    pub fn domain_spec(&self, axis_value: Option<f64>) -> Result<DomainSpec, ConfigError> {
        let mut modes: Vec<ModeConfig> = self.domain.modes.clone();
        let mut holes = self.holes.clone();
        let label = match (&self.sweep, axis_value) {
            (Some(sweep), Some(v)) => {
                match sweep.axis {
                    SweepAxis::HoleRadius => holes[sweep.index].radius_du = v,
                    SweepAxis::HoleCenterX => holes[sweep.index].center_du[0] = v,
                    SweepAxis::HoleValue => holes[sweep.index].boundary_value_du2 = Some(v),
                    SweepAxis::ModeAmplitude => {
                        let m = &mut modes[sweep.index];
                        let (c, s) = (m.cos, m.sin);
                        let norm = c.hypot(s);
                        if norm > 0.0 {
                            m.cos = v * c / norm;
                            m.sin = v * s / norm;
                        } else {
                            m.cos = v;
                        }
                    }
                }
                format!("sweep value {v} of {}", sweep.axis.name())
            }
            _ => String::new(),
        };
        let r0 = self.domain.outer_radius_du;
        if self.closed_form() {
            if !modes.is_empty() {
                return Err(ConfigError::invalid(
                    "solver.method",
                    "the closed form needs a disk without Fourier modes",
                ));
            }
            for (i, h) in holes.iter_mut().enumerate() {
                if h.center_du != [0.0, 0.0] {
                    return Err(ConfigError::invalid(
                        format!("holes[{i}].center_du"),
                        "the closed form needs concentric holes",
                    ));
                }
                let exact = (h.radius_du * h.radius_du - r0 * r0) / 4.0;
                if let Some(g) = h.boundary_value_du2 {
                    if (g - exact).abs() > 1e-12 {
                        return Err(ConfigError::invalid(
                            format!("holes[{i}].boundary_value_du2"),
                            format!("the closed form takes the value {exact} on this hole, got {g}"),
                        ));
                    }
                }
                h.boundary_value_du2 = Some(exact);
            }
        }
        let modes = modes.into_iter().map(|m| FourierMode { k: m.k, cos: m.cos, sin: m.sin }).collect();
        let holes = holes
            .iter()
            .map(|h| {
                Hole::new(Point::new(h.center_du[0], h.center_du[1]), h.radius_du, h.boundary_value_du2.unwrap_or(0.0))
            })
            .collect();
        DomainSpec::new(r0, modes, holes).map_err(|e| {
            let path = domain_error_path(&e);
            match axis_value {
                Some(_) => ConfigError::invalid(path, format!("{e} at {label}")),
                None => ConfigError::invalid(path, e),
            }
        })
    }

    pub fn suite_options(&self) -> SuiteOptions {
        SuiteOptions {
            regime: self.stability.regime,
            theta: self.stability.theta,
            overdetermination_tolerance: self.tolerances.overdetermination,
            waive_overdetermination: self.stability.waive_overdetermination,
            growth_samples: self.stability.growth_samples,
            seed: self.seed,
        }
    }

    pub fn descent_options(&self) -> DescentOptions {
        let s = &self.shapeflow;
        DescentOptions {
            max_iters: s.max_iters,
            flux_tolerance: s.flux_tolerance,
            active_modes: s.active_modes,
            armijo: s.armijo,
            max_halvings: s.max_halvings,
            settings: FlowSettings {
                n_src: self.solver.n_src,
                offset_ratio: self.solver.offset_ratio,
                resolution: self.quadrature.resolution(),
            },
        }
    }
}
