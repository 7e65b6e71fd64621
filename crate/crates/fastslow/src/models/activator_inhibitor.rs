//! Activator-inhibitor switch with a Goldbeter-Koshland production term and
//! subcritical fast-subsystem Hopf bifurcations; noise is correlated through
//! a target covariance `N` factored into the diffusion matrix.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::{cholesky_2x2, ModelAnalytics, ModelPreset, PresetId};
use crate::error::{Error, Result};
use crate::sde::FastSlowSystem;

/// Steady-state switch response
/// `G(u,v,J,K) = 2uK / (B + √(B² - 4(v-u)uK))`, `B = v - u + vJ + uK`.
///
/// Evaluated in the cancellation-free form: when `B ≤ 0` (only possible for
/// `v < u`) the conjugate expression `(B - √(B²-c))/(2(v-u))` is used. A
/// radicand above `-1e-12` (relative) is clamped to zero; anything lower is
/// rejected.
pub fn goldbeter_koshland(u: f64, v: f64, j: f64, k: f64) -> Result<f64> {
    if u < 0.0 || v < 0.0 || j <= 0.0 || k <= 0.0 {
        return Err(Error::InvalidArgument(
            "goldbeter-koshland needs u, v >= 0 and J, K > 0".into(),
        ));
    }
    if u == 0.0 {
        return Ok(0.0);
    }
    let b = v - u + v * j + u * k;
    let mut radicand = b * b - 4.0 * (v - u) * u * k;
    let scale = (b * b).max(4.0 * (u * k * v).abs()).max(1.0);
    if radicand < -1e-12 * scale {
        return Err(Error::InvalidArgument(format!(
            "goldbeter-koshland radicand {radicand:.3e} substantially negative"
        )));
    }
    radicand = radicand.max(0.0);
    let s = radicand.sqrt();
    if b > 0.0 {
        Ok(2.0 * u * k / (b + s))
    } else {
        // here v - u <= -(vJ + uK) < 0, so the conjugate form is safe
        Ok((b - s) / (2.0 * (v - u)))
    }
}

/// Partial derivative `∂G/∂u`, analytic, for the trace root-find.
///
/// Valid where `B > 0` (always the case on the scanned manifold window);
/// verified against central differences in the tests.
pub fn goldbeter_koshland_du(u: f64, v: f64, j: f64, k: f64) -> f64 {
    let b = v - u + v * j + u * k;
    let radicand = (b * b - 4.0 * (v - u) * u * k).max(0.0);
    let s = radicand.sqrt();
    let db = k - 1.0;
    let ds = if s > 0.0 {
        (b * db - 2.0 * k * (v - 2.0 * u)) / s
    } else {
        0.0
    };
    let denom = b + s;
    (2.0 * k * denom - 2.0 * u * k * (db + ds)) / (denom * denom)
}

#[derive(Debug, Clone, Copy)]
pub struct AiParams {
    /// Production/decay coefficients `k0..k7` (index 0..=7; `k1` scales the
    /// slow signal).
    pub k: [f64; 8],
    pub j1: f64,
    pub j2: f64,
    pub eps: f64,
    pub sigma: f64,
    /// Target noise covariance entries.
    pub n11: f64,
    pub n12: f64,
    pub n22: f64,
}

impl Default for AiParams {
    fn default() -> Self {
        AiParams {
            k: [4.0, 1.0, 1.0, 1.0, 1.0, 0.1, 0.075, 1.0],
            j1: 0.3,
            j2: 0.3,
            eps: 1e-5,
            sigma: 1e-3,
            n11: 1.0,
            n12: 0.2,
            n22: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AiAnalytics {
    pub params: AiParams,
    /// Fast-subsystem Hopf points on the critical manifold, ascending in y.
    pub hopf_points: Vec<f64>,
}

impl AiAnalytics {
    /// Slope of the manifold line `x2 = (k5/k6) x1`.
    pub fn manifold_ratio(&self) -> f64 {
        self.params.k[5] / self.params.k[6]
    }

    /// Critical manifold as a graph over `x1`:
    /// `y = (k2 x1 + k7 x1 x2 - k0 G(k3 x1, k4, J1, J2)) / k1`.
    pub fn manifold_y(&self, x1: f64) -> Result<f64> {
        let p = &self.params;
        let g = goldbeter_koshland(p.k[3] * x1, p.k[4], p.j1, p.j2)?;
        let x2 = self.manifold_ratio() * x1;
        Ok((p.k[2] * x1 + p.k[7] * x1 * x2 - p.k[0] * g) / p.k[1])
    }

    /// Trace of the fast Jacobian along the manifold.
    pub fn trace_on_manifold(&self, x1: f64) -> f64 {
        let p = &self.params;
        let gu = goldbeter_koshland_du(p.k[3] * x1, p.k[4], p.j1, p.j2);
        let x2 = self.manifold_ratio() * x1;
        p.k[0] * p.k[3] * gu - p.k[2] - p.k[7] * x2 - p.k[6]
    }

    /// Determinant of the fast Jacobian along the manifold.
    pub fn det_on_manifold(&self, x1: f64) -> f64 {
        let p = &self.params;
        let gu = goldbeter_koshland_du(p.k[3] * x1, p.k[4], p.j1, p.j2);
        let x2 = self.manifold_ratio() * x1;
        let df1_dx1 = p.k[0] * p.k[3] * gu - p.k[2] - p.k[7] * x2;
        -p.k[6] * df1_dx1 + p.k[5] * p.k[7] * x1
    }

    /// Manifold point `x1(y)` by bisection on the scanned window.
    pub fn equilibrium_x1(&self, y: f64) -> Result<f64> {
        bisect(|x1| self.manifold_y(x1).unwrap_or(f64::NAN) - y, 1e-9, 3.0, 1e-12)
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let flo = f(lo);
    let fhi = f(hi);
    if !flo.is_finite() || !fhi.is_finite() || flo * fhi > 0.0 {
        return Err(Error::NoConvergence(format!(
            "no sign change on [{lo}, {hi}]"
        )));
    }
    let lo_is_neg = flo < 0.0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if (fm < 0.0) == lo_is_neg {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Scans the manifold for trace roots with a positive determinant (genuine
/// Hopf points) and refines each by bisection.
fn find_hopf_points(analytics: &AiAnalytics) -> Result<Vec<f64>> {
    let n = 4000;
    let (x_lo, x_hi) = (1e-4, 2.0);
    let mut points = Vec::new();
    let mut prev_x = x_lo;
    let mut prev_t = analytics.trace_on_manifold(prev_x);
    for i in 1..=n {
        let x = x_lo + (x_hi - x_lo) * i as f64 / n as f64;
        let t = analytics.trace_on_manifold(x);
        if prev_t * t < 0.0 {
            let root = bisect(|xx| analytics.trace_on_manifold(xx), prev_x, x, 1e-13)?;
            if analytics.det_on_manifold(root) > 0.0 {
                points.push(analytics.manifold_y(root)?);
            }
        }
        prev_x = x;
        prev_t = t;
    }
    points.sort_by(f64::total_cmp);
    Ok(points)
}

/// Builds the activator-inhibitor preset with correlated diffusion from the
/// Cholesky factor of the target `N`.
pub fn activator_inhibitor(params: AiParams) -> Result<ModelPreset> {
    let mut analytics = AiAnalytics {
        params,
        hopf_points: Vec::new(),
    };
    analytics.hopf_points = find_hopf_points(&analytics)?;

    let p = params;
    let drift = Arc::new(move |x: &[f64], y: &[f64], out: &mut [f64]| {
        let g = goldbeter_koshland(p.k[3] * x[0], p.k[4], p.j1, p.j2).unwrap_or(f64::NAN);
        out[0] = p.k[0] * g + p.k[1] * y[0] - p.k[2] * x[0] - p.k[7] * x[0] * x[1];
        out[1] = p.k[5] * x[0] - p.k[6] * x[1];
    });
    let f_chol = cholesky_2x2(p.n11, p.n12, p.n22)?;
    let diffusion = Arc::new(move |_: &[f64], _: &[f64], out: &mut [f64]| {
        out.copy_from_slice(&f_chol);
    });
    let system = FastSlowSystem::new(
        2,
        1,
        2,
        p.eps,
        p.sigma,
        drift,
        Arc::new(|_, _, out| out[0] = 1.0),
        diffusion,
    )?;

    let y0 = 0.02;
    let x1 = analytics.equilibrium_x1(y0)?;
    let x0 = vec![x1, analytics.manifold_ratio() * x1];
    let mut map = BTreeMap::new();
    for (i, v) in p.k.iter().enumerate() {
        map.insert(format!("k{i}"), *v);
    }
    map.insert("j1".into(), p.j1);
    map.insert("j2".into(), p.j2);
    map.insert("eps".into(), p.eps);
    map.insert("sigma".into(), p.sigma);
    map.insert("n11".into(), p.n11);
    map.insert("n12".into(), p.n12);
    map.insert("n22".into(), p.n22);
    Ok(ModelPreset {
        id: PresetId::ActivatorInhibitor,
        params: map,
        system,
        analytics: ModelAnalytics::ActivatorInhibitor(analytics),
        x0,
        y0: vec![y0],
    })
}
