//! Numerical laboratory for the torsion problem `Δu = 1` on a planar domain
//! with circular holes, `u = 0` on the outer boundary.
//!
//! * [`geometry`]: domains, quadrature rules, distances and radii.
//! * [`solver`]: fundamental-solution representations of `u`.
//! * [`identities`]: both sides of the integral identities satisfied by `u`.
//! * [`stability`]: stability functionals, pointwise lemmas and explicit bounds.
//! * [`shapeflow`]: torsional energy, its shape derivative and a volume-preserving flow.

pub mod geometry;
pub mod identities;
pub mod numeric;
pub mod shapeflow;
pub mod solver;
pub mod stability;

pub use geometry::Point;

/// Space dimension of every field and domain handled here.
pub const DIM: usize = 2;
