//! Stability functionals, pointwise lemmas, explicit constants and theorem-level reports.

mod bounds;
mod functionals;
mod lemmas;
mod poincare;
mod suite;

use thiserror::Error;

pub use bounds::{
    a_np, alpha_np, bound_table, check_flux_bracket, exponents_tau, BoundInputs, BoundTable, BracketCheck, Regime,
};
pub use functionals::{
    asymmetry, asymmetry_lemma_constant, compute_z, compute_z_tubular, pseudo_distance, CenterFormula, CenterPoint,
};
pub use lemmas::{
    growth_checks, hopf_check, oscillation_bound_check, random_interior_points, tube_gradient_bound, GrowthReport,
    GrowthWitness, HopfReport, OscillationForm, OscillationOutcome, OscillationReport,
};
pub use poincare::{poincare_empirical, random_harmonic_fields, ExponentRegime, PoincareExponents, PoincareReport};
pub use suite::{
    fit_constants, hole_c2_norm, theorem_suite, FittedConstant, Hypothesis, Inequality, InequalityRow, Instance,
    StabilityReport, SuiteOptions,
};

use crate::geometry::GeometryError;
use crate::identities::IdentityError;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum StabilityError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Identity(#[from] IdentityError),
    #[error("invalid exponent triple (r, p, α) = ({r}, {p}, {alpha}) for N = {n}: violates {condition} and is not of the form r = p, α = 0")]
    InvalidExponents { n: u32, r: f64, p: f64, alpha: f64, condition: &'static str },
    #[error("dimension must be at least 2, got {0}")]
    Dimension(u32),
    #[error("the exponent needs θ in (0, 1) for N = {n} in this regime")]
    MissingTheta { n: u32 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
