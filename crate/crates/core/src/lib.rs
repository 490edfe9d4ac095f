//! Continuum voltage-profile model of a radial distribution feeder.
//!
//! The crate solves the nonlinear boundary value problem for the voltage
//! phase and amplitude along a straight feeder, evaluates the flux and
//! dissipation-rate functions of its power subsystems, checks every
//! dissipation equality and integral identity numerically, and compares the
//! continuum solution against a discrete impedance ladder.
//!
//! Module map:
//! - [`model`]: parameters, state equations, power profiles, manufactured solutions
//! - [`bvp`]: backward shooting with Newton correction
//! - [`dissipation`]: flux/dissipation functions, equality residuals, losses, phenomena
//! - [`ladder`]: discrete ladder network solved by backward-forward sweep
//! - [`scenario`]: configuration files and built-in presets
//! - [`cli`]: command-line front end

// `!(x <= tol)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bvp;
pub mod cli;
pub mod dissipation;
pub mod error;
pub mod ladder;
pub mod model;
pub mod numerics;
pub mod scenario;

pub use error::{Error, Result};
