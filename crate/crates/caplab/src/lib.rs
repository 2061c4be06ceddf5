//! Rotational minimal annuli in spherical caps of S³.
//!
//! The crate integrates the rotational minimal-surface ODE, locates free-boundary and
//! capillary contact with geodesic balls, samples the resulting annuli, and runs a
//! battery of geometric checks on them: polar duality, Hopf constancy, index forms,
//! conformal-change identities and weighted orthogonality integrals.
//!
//! Modules are layered bottom-up:
//! - [`vec`] and [`sphere_geometry`]: points, caps, stereographic and conformal maps.
//! - [`ode`] and [`rotational_solver`]: the profile ODE and the contact search.
//! - [`lattice`] and [`surface_analysis`]: sampled surfaces and their checks.
//! - [`polar_dual`], [`spectral`], [`conformal_lab`]: derived constructions.
//! - [`reports`]: persistence, figures and the command layer behind the `caplab` binary.

// `!(a < b)` is used deliberately so NaN inputs fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conformal_lab;
pub mod lattice;
pub mod ode;
pub mod polar_dual;
pub mod reports;
pub mod rotational_solver;
pub mod spectral;
pub mod sphere_geometry;
pub mod surface_analysis;
pub mod vec;

pub use rotational_solver::{ContactData, ProfileSolution};
pub use sphere_geometry::{CapParams, SpherePoint, TangentVector};
pub use surface_analysis::RotationalAnnulus;
