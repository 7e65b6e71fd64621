//! Ocean box-circulation model: scalar S-shaped fast subsystem
//! `dx = (1/ε)[y - x(1 + η²(1-x)²)] ds + (σ/√ε) dW`, `dy = -1 ds`.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::{ModelAnalytics, ModelPreset, PresetId};
use crate::error::{Error, Result};
use crate::sde::{DomainBox, FastSlowSystem};

#[derive(Debug, Clone, Copy)]
pub struct StommelParams {
    /// Shape parameter η² of the cubic-like nonlinearity.
    pub eta2: f64,
    pub eps: f64,
    pub sigma: f64,
}

impl Default for StommelParams {
    fn default() -> Self {
        StommelParams {
            eta2: 7.5,
            eps: 0.01,
            sigma: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StommelAnalytics {
    pub eta2: f64,
    /// Fold at small x (large y): `(x⁻, y⁻)`.
    pub fold_lower_x: (f64, f64),
    /// Fold at large x (small y): `(x⁺, y⁺)`, the transition studied here.
    pub fold_upper_x: (f64, f64),
}

impl StommelAnalytics {
    fn new(eta2: f64) -> Result<Self> {
        // folds solve h0'(x) = 0: 3η²x² - 4η²x + (η² + 1) = 0
        let disc = eta2 * eta2 - 3.0 * eta2;
        if disc <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "eta2 = {eta2} yields no folds (need eta2 > 3)"
            )));
        }
        let root = disc.sqrt();
        let x_minus = (2.0 * eta2 - root) / (3.0 * eta2);
        let x_plus = (2.0 * eta2 + root) / (3.0 * eta2);
        let a = StommelAnalytics {
            eta2,
            fold_lower_x: (x_minus, 0.0),
            fold_upper_x: (x_plus, 0.0),
        };
        Ok(StommelAnalytics {
            fold_lower_x: (x_minus, a.h0(x_minus)),
            fold_upper_x: (x_plus, a.h0(x_plus)),
            ..a
        })
    }

    /// Critical manifold as a graph over x: `y = h0(x) = x(1 + η²(1-x)²)`.
    pub fn h0(&self, x: f64) -> f64 {
        x * (1.0 + self.eta2 * (1.0 - x) * (1.0 - x))
    }

    pub fn d_h0(&self, x: f64) -> f64 {
        1.0 + self.eta2 * (1.0 - x) * (1.0 - x) - 2.0 * self.eta2 * x * (1.0 - x)
    }

    /// Fast linearization along the manifold, `D_x f = -h0'(x)`.
    pub fn fast_linearization(&self, x: f64) -> f64 {
        -self.d_h0(x)
    }

    /// Upper attracting branch `x(y)` for `y > y⁺`, by bisection.
    pub fn upper_branch_x(&self, y: f64) -> Result<f64> {
        let (x_plus, y_plus) = self.fold_upper_x;
        if y <= y_plus {
            return Err(Error::NoAttractingBranch);
        }
        let mut lo = x_plus;
        let mut hi = x_plus.max(1.0) + 2.0;
        while self.h0(hi) < y {
            hi += 1.0;
            if hi > 1e6 {
                return Err(Error::NoConvergence("upper branch bracket".into()));
            }
        }
        // h0 is increasing on [x⁺, ∞)
        while hi - lo > 1e-14 {
            let mid = 0.5 * (lo + hi);
            if self.h0(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Builds the box-circulation preset with slow drift `g ≡ -1` and additive
/// unit diffusion.
pub fn stommel_cessi(params: StommelParams) -> Result<ModelPreset> {
    let analytics = StommelAnalytics::new(params.eta2)?;
    let eta2 = params.eta2;
    let system = FastSlowSystem::new(
        1,
        1,
        1,
        params.eps,
        params.sigma,
        Arc::new(move |x: &[f64], y: &[f64], out: &mut [f64]| {
            let one_m = 1.0 - x[0];
            out[0] = y[0] - x[0] * (1.0 + eta2 * one_m * one_m);
        }),
        Arc::new(|_, _, out| out[0] = -1.0),
        Arc::new(|_, _, out| out[0] = 1.0),
    )?
    // wide box: clamping exists but never fires, even after the jump to the
    // lower branch
    .with_domain(DomainBox::clamped(vec![-1.0], vec![3.0]));

    let y0 = 1.5;
    let x0 = analytics.upper_branch_x(y0)?;
    let mut map = BTreeMap::new();
    map.insert("eta2".into(), params.eta2);
    map.insert("eps".into(), params.eps);
    map.insert("sigma".into(), params.sigma);
    Ok(ModelPreset {
        id: PresetId::StommelCessi,
        params: map,
        system,
        analytics: ModelAnalytics::Stommel(analytics),
        x0: vec![x0],
        y0: vec![y0],
    })
}
