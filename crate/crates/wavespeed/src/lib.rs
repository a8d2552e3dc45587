//! Numerical laboratory for traveling waves of the coupled FKPP-Burgers
//! system
//!
//! ```text
//!     T_t - T_xx + (u T)_x = T(1 - T),
//!     u_t - nu u_xx + u u_x = rho T(1 - T).
//! ```
//!
//! Traveling-wave profiles `(T, U)(x - c t)` connecting `(1, u0)` to `(0, 0)`
//! satisfy a planar spatial ODE when `nu = 0` and a three-dimensional one for
//! `nu > 0`. The crate computes, classifies, and bounds admissible wave
//! speeds by four routes that cross-check one another:
//!
//! * [`model`] — the reduced spatial ODE systems, equilibria, conserved
//!   quantities, and local eigenstructure;
//! * [`integrate`] — adaptive embedded Runge-Kutta integration with event
//!   detection, producing sampled trajectories;
//! * [`shooting`] — heteroclinic-connection classification and minimal-speed
//!   bisection, including prefactor and threshold scans;
//! * [`pde`] — a method-of-lines simulator of the full system with front
//!   tracking and spreading-speed estimation;
//! * [`bounds`] — closed-form speed bounds, trapping-region inequalities,
//!   integral identities along computed profiles, and sampling-based
//!   falsification of user-supplied auxiliary functions.
//!
//! [`cli`] holds the configuration, caching, and serialization plumbing used
//! by the `wavespeed` binary.

// Validations are written as `!(x > 0.0)` so NaN fails them; the negated
// form is the point.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cli;
pub mod integrate;
pub mod model;
pub mod pde;
pub mod shooting;
