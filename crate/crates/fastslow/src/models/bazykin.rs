//! Predator-prey system with saturation and quadratic mortality terms near a
//! codimension-two Bogdanov-Takens point. The slow variables are the
//! saturation and predator-mortality parameters `(y1, y2) = (α, δ)`,
//! driven along an interpolated path through the stable wedge between the
//! Hopf and fold curves into the BT point.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::{ModelAnalytics, ModelPreset, PresetId};
use crate::error::{Error, Result};
use crate::sde::FastSlowSystem;

#[derive(Debug, Clone)]
pub struct BazykinParams {
    pub gamma: f64,
    pub xi: f64,
    pub eps: f64,
    pub sigmas: [f64; 2],
    /// Slow-path waypoints `(y1, y2)`; the BT point is appended
    /// automatically. `None` selects a default path along the midline of the
    /// stable wedge, starting at the reference point (0.3, 0.3293).
    pub waypoints: Option<Vec<(f64, f64)>>,
}

impl Default for BazykinParams {
    fn default() -> Self {
        BazykinParams {
            gamma: 1.0,
            xi: 0.01,
            eps: 3e-5,
            sigmas: [1e-3, 1e-3],
            waypoints: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BazykinAnalytics {
    pub gamma: f64,
    pub xi: f64,
    /// Bogdanov-Takens point `(y1, y2)`.
    pub bt_point: (f64, f64),
    /// Interior equilibrium `(x1, x2)` at the BT point.
    pub bt_state: (f64, f64),
    /// Newton-form coefficients of the slow path `y2 = P(y1)`.
    path_coeffs: Vec<f64>,
    path_nodes: Vec<f64>,
}

impl BazykinAnalytics {
    /// Fold-curve defining polynomial; vanishes on the fold (limit point)
    /// curve in the `(y1, y2)` parameter plane.
    pub fn c_lp(&self, y1: f64, y2: f64) -> f64 {
        let xi = self.xi;
        4.0 * xi * (y1 - 1.0).powi(3)
            + ((y1 * y1 - 20.0 * y1 - 8.0) * xi * xi
                + 2.0 * y1 * xi * (y1 * y1 - 11.0 * y1 + 10.0)
                + y1 * y1 * (y1 - 1.0) * (y1 - 1.0))
                * y2
            - 4.0 * (y1 + xi).powi(3) * y2 * y2
    }

    /// Hopf-curve defining polynomial.
    pub fn c_h(&self, y1: f64, y2: f64) -> f64 {
        let xi = self.xi;
        4.0 * xi * (y1 * (y1 - 1.0) + xi * (y1 + 1.0))
            + (2.0 * (xi + 1.0) * y1 * y1 + (3.0 * xi * xi - 2.0 * xi - 1.0) * y1
                + xi * (xi * xi - 2.0 * xi + 5.0))
                * y2
            + (y1 + xi - 1.0) * (y1 + xi - 1.0) * y2 * y2
    }

    /// Upper `y2`-root of the quadratic `c_h(y1, ·) = 0` (Hopf branch
    /// bounding the stable wedge from below).
    pub fn c_h_upper_root(&self, y1: f64) -> Result<f64> {
        let xi = self.xi;
        let a = (y1 + xi - 1.0) * (y1 + xi - 1.0);
        let b = 2.0 * (xi + 1.0) * y1 * y1 + (3.0 * xi * xi - 2.0 * xi - 1.0) * y1
            + xi * (xi * xi - 2.0 * xi + 5.0);
        let c = 4.0 * xi * (y1 * (y1 - 1.0) + xi * (y1 + 1.0));
        quad_roots(a, b, c).map(|(r1, r2)| r1.max(r2))
    }

    /// Upper `y2`-root of `c_lp(y1, ·) = 0` (fold branch bounding the wedge
    /// from above).
    pub fn c_lp_upper_root(&self, y1: f64) -> Result<f64> {
        let xi = self.xi;
        let a = -4.0 * (y1 + xi).powi(3);
        let b = (y1 * y1 - 20.0 * y1 - 8.0) * xi * xi
            + 2.0 * y1 * xi * (y1 * y1 - 11.0 * y1 + 10.0)
            + y1 * y1 * (y1 - 1.0) * (y1 - 1.0);
        let c = 4.0 * xi * (y1 - 1.0).powi(3);
        quad_roots(a, b, c).map(|(r1, r2)| r1.max(r2))
    }

    /// Prey nullcline intersection: `x2` of the interior equilibrium family.
    pub fn family_x2(&self, x1: f64, y1: f64) -> f64 {
        (1.0 - self.xi * x1) * (1.0 + y1 * x1)
    }

    /// Mortality `y2` that makes `(x1, family_x2)` an equilibrium.
    pub fn family_y2(&self, x1: f64, y1: f64) -> f64 {
        let q = 1.0 + y1 * x1;
        (x1 / q - self.gamma) / self.family_x2(x1, y1)
    }

    /// Fast Jacobian at a state.
    pub fn jacobian(&self, x: &[f64], y: &[f64]) -> DMatrix<f64> {
        let q = 1.0 + y[0] * x[0];
        DMatrix::from_row_slice(
            2,
            2,
            &[
                1.0 - x[1] / (q * q) - 2.0 * self.xi * x[0],
                -x[0] / q,
                x[1] / (q * q),
                -self.gamma + x[0] / q - 2.0 * y[1] * x[1],
            ],
        )
    }

    /// Interior equilibrium at `(y1, y2)` by damped Newton from `x1_seed`.
    pub fn equilibrium_at(&self, y: &[f64], x1_seed: f64) -> Result<(f64, f64)> {
        let phi = |x1: f64| {
            let q = 1.0 + y[0] * x1;
            -self.gamma + x1 / q - y[1] * (1.0 - self.xi * x1) * q
        };
        let mut x1 = x1_seed;
        for _ in 0..200 {
            let f = phi(x1);
            let h = 1e-8 * x1.abs().max(1.0);
            let df = (phi(x1 + h) - phi(x1 - h)) / (2.0 * h);
            if df == 0.0 {
                break;
            }
            let step = f / df;
            x1 -= step;
            if !x1.is_finite() {
                return Err(Error::NoConvergence("equilibrium newton diverged".into()));
            }
            if step.abs() < 1e-14 * x1.abs().max(1.0) {
                let x2 = self.family_x2(x1, y[0]);
                return Ok((x1, x2));
            }
        }
        Err(Error::NoConvergence("equilibrium newton stalled".into()))
    }

    /// Fold point of the equilibrium family at fixed `y1`: solves the
    /// extended system `φ = 0, ∂φ/∂x1 = 0` over `(x1, y2)`, where
    /// `φ(x1) = -γ + x1/q - y2 (1 - ξ x1) q`, `q = 1 + y1 x1`.
    ///
    /// Returns `(x1, x2, y2)`; the determinant of the Jacobian vanishes
    /// there and `y2` lies on the fold curve.
    pub fn fold_point_at_y1(&self, y1: f64, x1_seed: f64, y2_seed: f64) -> Result<(f64, f64, f64)> {
        let (gamma, xi) = (self.gamma, self.xi);
        let phi = |x1: f64, y2: f64| {
            let q = 1.0 + y1 * x1;
            -gamma + x1 / q - y2 * (1.0 - xi * x1) * q
        };
        let dphi_dx1 = |x1: f64, y2: f64| {
            let q = 1.0 + y1 * x1;
            1.0 / (q * q) - y2 * (-xi * q + (1.0 - xi * x1) * y1)
        };
        let (mut x1, mut y2) = (x1_seed, y2_seed);
        for _ in 0..200 {
            let f0 = phi(x1, y2);
            let f1 = dphi_dx1(x1, y2);
            let h = 1e-7;
            let j00 = (phi(x1 + h, y2) - phi(x1 - h, y2)) / (2.0 * h);
            let j01 = (phi(x1, y2 + h) - phi(x1, y2 - h)) / (2.0 * h);
            let j10 = (dphi_dx1(x1 + h, y2) - dphi_dx1(x1 - h, y2)) / (2.0 * h);
            let j11 = (dphi_dx1(x1, y2 + h) - dphi_dx1(x1, y2 - h)) / (2.0 * h);
            let det = j00 * j11 - j01 * j10;
            if det.abs() < 1e-30 {
                return Err(Error::NoConvergence("fold newton: singular jacobian".into()));
            }
            let dx = (f0 * j11 - f1 * j01) / det;
            let dy = (f1 * j00 - f0 * j10) / det;
            x1 -= dx;
            y2 -= dy;
            if !x1.is_finite() || !y2.is_finite() {
                return Err(Error::NoConvergence("fold newton diverged".into()));
            }
            if dx.abs().max(dy.abs()) < 1e-14 {
                return Ok((x1, self.family_x2(x1, y1), y2));
            }
        }
        Err(Error::NoConvergence("fold newton stalled".into()))
    }

    /// Slow path `y2 = P(y1)` (Newton interpolation through the waypoints).
    pub fn path_y2(&self, y1: f64) -> f64 {
        let n = self.path_nodes.len();
        let mut v = self.path_coeffs[n - 1];
        for i in (0..n - 1).rev() {
            v = v * (y1 - self.path_nodes[i]) + self.path_coeffs[i];
        }
        v
    }

    /// Slope `P'(y1)` of the slow path.
    pub fn path_slope(&self, y1: f64) -> f64 {
        // derivative of the Newton form via dual accumulation
        let n = self.path_nodes.len();
        let mut v = self.path_coeffs[n - 1];
        let mut dv = 0.0;
        for i in (0..n - 1).rev() {
            dv = dv * (y1 - self.path_nodes[i]) + v;
            v = v * (y1 - self.path_nodes[i]) + self.path_coeffs[i];
        }
        dv
    }
}

fn quad_roots(a: f64, b: f64, c: f64) -> Result<(f64, f64)> {
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 || a == 0.0 {
        return Err(Error::NoConvergence("quadratic has no real roots".into()));
    }
    let s = disc.sqrt();
    Ok(((-b + s) / (2.0 * a), (-b - s) / (2.0 * a)))
}

/// Trace and determinant of the Jacobian along the equilibrium family
/// parameterized by `(x1, y1)` with `y2` chosen to keep it an equilibrium.
fn family_trace_det(gamma: f64, xi: f64, x1: f64, y1: f64) -> (f64, f64) {
    let q = 1.0 + y1 * x1;
    let x2 = (1.0 - xi * x1) * q;
    let delta = (x1 / q - gamma) / x2;
    let j11 = 1.0 - x2 / (q * q) - 2.0 * xi * x1;
    let j12 = -x1 / q;
    let j21 = x2 / (q * q);
    let j22 = -delta * x2; // equilibrium identity: -γ + x1/q = δ x2
    (j11 + j22, j11 * j22 - j12 * j21)
}

/// Locates the BT point: simultaneous zero of trace and determinant over
/// `(x1, y1)`, Newton-refined from a coarse grid scan. The tangency of the
/// Hopf and fold curves there is checked by the caller's tests.
fn locate_bt(gamma: f64, xi: f64) -> Result<(f64, f64, f64, f64)> {
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..120 {
        let x1 = 0.5 + 29.5 * i as f64 / 119.0;
        for j in 0..120 {
            let y1 = 0.05 + 0.95 * j as f64 / 119.0;
            let (t, d) = family_trace_det(gamma, xi, x1, y1);
            let q = t * t + d * d;
            if q.is_finite() && q < best.0 {
                best = (q, x1, y1);
            }
        }
    }
    let (mut x1, mut y1) = (best.1, best.2);
    for _ in 0..100 {
        let (t, d) = family_trace_det(gamma, xi, x1, y1);
        let h = 1e-7;
        let (tp1, dp1) = family_trace_det(gamma, xi, x1 + h, y1);
        let (tm1, dm1) = family_trace_det(gamma, xi, x1 - h, y1);
        let (tp2, dp2) = family_trace_det(gamma, xi, x1, y1 + h);
        let (tm2, dm2) = family_trace_det(gamma, xi, x1, y1 - h);
        let j00 = (tp1 - tm1) / (2.0 * h);
        let j01 = (tp2 - tm2) / (2.0 * h);
        let j10 = (dp1 - dm1) / (2.0 * h);
        let j11 = (dp2 - dm2) / (2.0 * h);
        let det = j00 * j11 - j01 * j10;
        if det.abs() < 1e-30 {
            return Err(Error::NoConvergence("BT newton: singular jacobian".into()));
        }
        let dx = (t * j11 - d * j01) / det;
        let dy = (d * j00 - t * j10) / det;
        x1 -= dx;
        y1 -= dy;
        if dx.abs().max(dy.abs()) < 1e-14 {
            let q = 1.0 + y1 * x1;
            let x2 = (1.0 - xi * x1) * q;
            let y2 = (x1 / q - gamma) / x2;
            return Ok((y1, y2, x1, x2));
        }
    }
    Err(Error::NoConvergence("BT newton did not converge".into()))
}

/// Builds the predator-prey preset. The slow drift follows
/// `(ẏ1, ẏ2) = (1, P'(y1))` along the interpolated path into the BT point.
pub fn bazykin(params: BazykinParams) -> Result<ModelPreset> {
    let BazykinParams {
        gamma,
        xi,
        eps,
        sigmas,
        waypoints,
    } = params.clone();
    let (bt_y1, bt_y2, bt_x1, bt_x2) = locate_bt(gamma, xi)?;

    let mut analytics = BazykinAnalytics {
        gamma,
        xi,
        bt_point: (bt_y1, bt_y2),
        bt_state: (bt_x1, bt_x2),
        path_coeffs: Vec::new(),
        path_nodes: Vec::new(),
    };

    // default path: reference start, then the midline of the stable wedge
    let mut wps = match waypoints {
        Some(w) => w,
        None => {
            let mut w = vec![(0.3, 0.3293)];
            for y1 in [0.36, 0.41, 0.44] {
                let mid =
                    0.5 * (analytics.c_h_upper_root(y1)? + analytics.c_lp_upper_root(y1)?);
                w.push((y1, mid));
            }
            w
        }
    };
    wps.push((bt_y1, bt_y2));
    let nodes: Vec<f64> = wps.iter().map(|p| p.0).collect();
    let mut coeffs: Vec<f64> = wps.iter().map(|p| p.1).collect();
    let n = nodes.len();
    for j in 1..n {
        for i in (j..n).rev() {
            coeffs[i] = (coeffs[i] - coeffs[i - 1]) / (nodes[i] - nodes[i - j]);
        }
    }
    analytics.path_nodes = nodes;
    analytics.path_coeffs = coeffs;

    let drift = Arc::new(move |x: &[f64], y: &[f64], out: &mut [f64]| {
        let q = 1.0 + y[0] * x[0];
        let interaction = x[0] * x[1] / q;
        out[0] = x[0] - interaction - xi * x[0] * x[0];
        out[1] = -gamma * x[1] + interaction - y[1] * x[1] * x[1];
    });
    let a2 = analytics.clone();
    let slow = Arc::new(move |_: &[f64], y: &[f64], out: &mut [f64]| {
        out[0] = 1.0;
        out[1] = a2.path_slope(y[0]);
    });
    let diffusion = Arc::new(move |_: &[f64], _: &[f64], out: &mut [f64]| {
        out.fill(0.0);
        out[0] = sigmas[0];
        out[3] = sigmas[1];
    });
    let system = FastSlowSystem::new(2, 2, 2, eps, 1.0, drift, slow, diffusion)?;

    let y0 = vec![0.3, analytics.path_y2(0.3)];
    let (x1, x2) = analytics.equilibrium_at(&y0, 3.15)?;
    let mut map = BTreeMap::new();
    map.insert("gamma".into(), gamma);
    map.insert("xi".into(), xi);
    map.insert("eps".into(), eps);
    map.insert("sigma1".into(), sigmas[0]);
    map.insert("sigma2".into(), sigmas[1]);
    map.insert("bt_y1".into(), bt_y1);
    map.insert("bt_y2".into(), bt_y2);
    Ok(ModelPreset {
        id: PresetId::Bazykin,
        params: map,
        system,
        analytics: ModelAnalytics::Bazykin(analytics),
        x0: vec![x1, x2],
        y0,
    })
}
