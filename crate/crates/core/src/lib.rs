//! Radial minimizers of anisotropic energies between concentric annuli.
//!
//! The crate computes closed-form minimizers of the combined energy and
//! combined distortion, shooting-based minimizers of the total energy, and
//! numerical verifiers (free Lagrangians, pointwise lower bounds, competitor
//! sweeps) that check minimality against discretized non-radial maps.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod closed_form;
pub mod competitors;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod lagrangians;
pub mod ode;
pub mod ode_shooting;
pub mod quadrature;

pub use error::{Error, Result};
pub use geometry::{
    differentiate_grid, radial_lift, radial_lift_on, AnnulusPair, DerivativeField, GridRule,
    PolarGridMap, RadialFn, RadialProfile, Weights,
};
