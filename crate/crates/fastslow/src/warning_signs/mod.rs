//! Variance-based early-warning estimators and scaling-law fits.
//!
//! Estimators reproduce the four measurement strategies compared in the
//! applications: a plain sliding window (M1), sliding windows with linear or
//! critical-manifold detrending (M2), pointwise ensemble covariance (M3) and
//! frozen-slow-variable scans of the fast subsystem (M4). Fits recover the
//! transition point `y_c` from reciprocal scaling laws by Levenberg–
//! Marquardt least squares.

mod estimators;
mod fit;

pub use estimators::{
    ensemble_pointwise_moments, ensemble_window_average, frozen_variance_scan,
    sliding_window_variance, Detrend,
};
pub use fit::{compare_laws, fit_scaling, ScalingFit, ScalingLaw};
