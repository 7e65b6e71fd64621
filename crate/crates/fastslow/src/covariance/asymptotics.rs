//! Numerical checks of the supporting asymptotic estimates: the endpoint
//! Laplace integral behind the moment-error bounds, and the even-moment
//! bound for linearly damped SDEs.

use crate::error::{Error, Result};
use crate::quad;
use crate::sde::rng;
use crate::stats;

/// Quadrature value vs. endpoint-Laplace prediction for
/// `∫_0^s exp(φ(r)/ε) dr` with
/// `φ(r) = (2κ/3)[(-s-y0)^{3/2} - (-r-y0)^{3/2}]`.
#[derive(Debug, Clone, Copy)]
pub struct LaplaceRatio {
    pub numeric: f64,
    pub asymptotic: f64,
}

impl LaplaceRatio {
    pub fn ratio(&self) -> f64 {
        self.numeric / self.asymptotic
    }
}

/// Computes the integral by adaptive Gauss–Kronrod quadrature (relative
/// tolerance 1e-10) and the endpoint approximation `ε/(κ√(-s-y0))`.
///
/// Requires the normally hyperbolic window `0 ≤ s` and `-s - y0 > 0`.
pub fn laplace_ratio(y0: f64, s: f64, eps: f64, kappa: f64) -> Result<LaplaceRatio> {
    if s < 0.0 || -s - y0 <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "window violated: need s >= 0 and -s - y0 > 0, got s={s}, y0={y0}"
        )));
    }
    if eps <= 0.0 || kappa <= 0.0 {
        return Err(Error::InvalidArgument("eps and kappa must be positive".into()));
    }
    let asymptotic = eps / (kappa * (-s - y0).sqrt());
    let edge = (-s - y0).powf(1.5);
    let phi = move |r: f64| 2.0 * kappa / 3.0 * (edge - (-r - y0).powf(1.5));
    let numeric = if s == 0.0 {
        0.0
    } else {
        quad::integrate(|r| (phi(r) / eps).exp(), 0.0, s, 1e-10)?
    };
    Ok(LaplaceRatio { numeric, asymptotic })
}

/// Result of a Monte-Carlo check of the even-moment bound
/// `E[X^{2p}] ≤ p! (M²/κ)^p` for `dX = -θ X dt + M dW`, `X₀ = 0`.
#[derive(Debug, Clone, Copy)]
pub struct MomentBoundCheck {
    pub empirical: f64,
    pub bound: f64,
    /// Monte-Carlo standard error of `empirical`.
    pub std_err: f64,
    /// Whether `empirical ≤ bound + 3·std_err`.
    pub satisfied: bool,
}

/// Simulates the damped test SDE and compares `E[X^{2p}]` at the horizon
/// against the bound with `κ = θ`.
pub fn moment_bound_check(
    theta: f64,
    noise: f64,
    p: u32,
    n_paths: usize,
    horizon: f64,
    seed: u64,
) -> Result<MomentBoundCheck> {
    if theta <= 0.0 || noise < 0.0 || horizon <= 0.0 || n_paths == 0 {
        return Err(Error::InvalidArgument(
            "theta, horizon must be positive; noise >= 0; n_paths >= 1".into(),
        ));
    }
    if !(1..=3).contains(&p) {
        return Err(Error::InvalidArgument(format!("p must be in 1..=3, got {p}")));
    }
    let dt = (0.01 / theta).min(horizon / 100.0);
    let n_steps = (horizon / dt).ceil() as usize;
    let sqrt_dt = dt.sqrt();

    let mut samples = Vec::with_capacity(n_paths);
    for path in 0..n_paths {
        let mut x = 0.0;
        for step in 0..n_steps {
            let xi = rng::normal_at(seed, path as u64, step as u64, 0);
            x += -theta * x * dt + noise * sqrt_dt * xi;
        }
        samples.push(x.powi(2 * p as i32));
    }
    let empirical = stats::mean(&samples);
    let std_err = (stats::sample_variance(&samples) / n_paths as f64).sqrt();
    let mut bound = 1.0;
    for i in 1..=p {
        bound *= i as f64;
    }
    bound *= (noise * noise / theta).powi(p as i32);
    Ok(MomentBoundCheck {
        empirical,
        bound,
        std_err,
        satisfied: empirical <= bound + 3.0 * std_err,
    })
}
