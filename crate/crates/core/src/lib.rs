//! First-order Melnikov vector functions for `n`-dimensional piecewise
//! smooth systems switching on the planes `x1 = 0` and `x2 = 0`.
//!
//! The crate offers two independent routes to the Melnikov vector `M(h)`:
//!
//! * a numerical one ([`melnikov`]) that integrates along the unperturbed
//!   orbit produced by the flow engine ([`flow`]), for arbitrary systems
//!   with known first integrals;
//! * an exact one ([`symbolic`]) for the polynomial family perturbing the
//!   linear center, returning polynomials in `(h2, h3, ..., hn)` with
//!   coefficients in `Q + Q*pi + Q*sqrt(2)`.
//!
//! [`zeros`] locates simple zeros of either form, and [`flow`] checks them
//! against the perturbed Poincaré map.
//!
//! The crate is `no_std` (with `alloc`) unless the `std` feature is enabled.

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod error;
pub mod family;
pub mod flow;
pub mod linalg;
pub mod melnikov;
pub mod model;
pub mod ode;
pub mod planar;
pub mod poly;
pub mod quadrature;
pub mod ring;
pub mod symbolic;
pub mod zeros;

pub use error::{Error, Result, Warning};
pub use family::{builtin_integrals, builtin_system, CoefficientTable};
pub use model::{
    classify_region, entry_region, CornerPoints, FirstIntegralSet, LevelParameter, PiecewiseSystem,
    Plane, RegionId, StateVector, VectorField,
};
pub use symbolic::MelnikovPolynomialVector;
