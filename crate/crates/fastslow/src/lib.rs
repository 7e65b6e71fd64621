//! Numerical toolkit for critical transitions in stochastic fast-slow systems.
//!
//! The crate is organized around the pipeline used to produce variance-based
//! early-warning signs for tipping points:
//!
//! 1. [`normal_forms`]: catalog of fast-subsystem bifurcations up to
//!    codimension two, their attracting-branch linearizations `A0(y)`, and the
//!    slow-flow conditions that decide whether a bifurcation is a critical
//!    transition.
//! 2. [`covariance`]: the slow-manifold covariance equation
//!    `0 = A0 X + X A0ᵀ + N`, closed-form solutions per bifurcation, the
//!    double-singular fold expansions in `ε`, and numerical verification of
//!    the supporting asymptotics.
//! 3. [`sde`]: seed-reproducible Euler–Maruyama integration of fast-slow
//!    SDEs, single paths and ensembles.
//! 4. [`warning_signs`]: variance estimators (sliding window, ensemble
//!    pointwise, frozen-slow scans) and scaling-law fits that predict the
//!    transition point `y_c`.
//! 5. [`models`]: the application systems (ocean box circulation, adaptive
//!    SIS epidemics, an activator-inhibitor switch, a predator-prey system
//!    near a codimension-two point, and Euler buckling) as ready-made presets.
//!
//! The `fastslow` binary wires these into reproducible experiments; see the
//! README for CLI usage.

// index loops mirror the matrix algebra throughout; the iterator forms read worse here
#![allow(clippy::needless_range_loop)]

pub mod covariance;
pub mod error;
pub mod models;
pub mod normal_forms;
pub mod quad;
pub mod sde;
pub mod series;
pub mod stats;
pub mod verify;
pub mod warning_signs;

pub use error::{Error, Result};
