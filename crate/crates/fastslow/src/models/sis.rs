//! Adaptive SIS epidemic (pair-approximation moment closure): three fast
//! link/node densities driven by a slowly increasing infection rate, clamped
//! to the admissible box `[0,1] × [0, μ/2]²`.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::{ModelAnalytics, ModelPreset, PresetId};
use crate::error::Result;
use crate::sde::{DomainBox, FastSlowSystem};

#[derive(Debug, Clone, Copy)]
pub struct SisParams {
    /// Recovery rate.
    pub r: f64,
    /// Rewiring rate.
    pub w: f64,
    /// Mean degree `2K/N`.
    pub mu: f64,
    pub eps: f64,
    pub sigmas: [f64; 3],
}

impl Default for SisParams {
    fn default() -> Self {
        SisParams {
            r: 0.002,
            w: 0.4,
            mu: 20.0,
            eps: 0.005,
            sigmas: [0.01, 0.01, 0.01],
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SisAnalytics {
    pub r: f64,
    pub w: f64,
    pub mu: f64,
    /// Transcritical epidemic threshold `y_c = (r + w)/μ`.
    pub threshold: f64,
}

impl SisAnalytics {
    /// Disease-free state `(0, 0, μ/2)` on the trivial branch.
    pub fn trivial_state(&self) -> [f64; 3] {
        [0.0, 0.0, self.mu / 2.0]
    }

    /// Fast-subsystem Jacobian along the trivial branch.
    pub fn trivial_branch_jacobian(&self, y: f64) -> DMatrix<f64> {
        let (r, w, mu) = (self.r, self.w, self.mu);
        #[rustfmt::skip]
        let j = DMatrix::from_row_slice(3, 3, &[
            -r,  -y,               -y,
            0.0, -y - 2.0 * r,     -y,
            0.0, y * mu - r - w,   y * mu - r - w,
        ]);
        j
    }

    /// Determinant of the lower 2×2 block of the trivial-branch Jacobian;
    /// its root is the threshold.
    pub fn lower_block_det(&self, y: f64) -> f64 {
        (y * self.mu - self.r - self.w) * (-2.0 * self.r)
    }
}

/// Builds the clamped SIS system; noise enters all three fast variables with
/// independent components (`sigma` is folded into the diffusion matrix).
pub fn sis_adaptive(params: SisParams) -> Result<ModelPreset> {
    let SisParams { r, w, mu, eps, sigmas } = params;
    let analytics = SisAnalytics {
        r,
        w,
        mu,
        threshold: (r + w) / mu,
    };
    let half_mu = mu / 2.0;
    let drift = Arc::new(move |x: &[f64], y: &[f64], out: &mut [f64]| {
        let links = half_mu - x[1] - x[2];
        let denom = (1.0 - x[0]).max(1e-12);
        out[0] = y[0] * links - r * x[0];
        out[1] = y[0] * links * (links / denom + 1.0) - 2.0 * r * x[1];
        out[2] = (r + w) * links - 2.0 * y[0] * links * x[2] / denom;
    });
    let diffusion = Arc::new(move |_: &[f64], _: &[f64], out: &mut [f64]| {
        out.fill(0.0);
        out[0] = sigmas[0];
        out[4] = sigmas[1];
        out[8] = sigmas[2];
    });
    let system = FastSlowSystem::new(
        3,
        1,
        3,
        eps,
        1.0, // per-component levels live in the diffusion matrix
        drift,
        Arc::new(|_, _, out| out[0] = 1.0),
        diffusion,
    )?
    .with_domain(DomainBox::clamped(
        vec![0.0, 0.0, 0.0],
        vec![1.0, half_mu, half_mu],
    ));

    let mut map = BTreeMap::new();
    map.insert("r".into(), r);
    map.insert("w".into(), w);
    map.insert("mu".into(), mu);
    map.insert("eps".into(), eps);
    map.insert("sigma1".into(), sigmas[0]);
    map.insert("sigma2".into(), sigmas[1]);
    map.insert("sigma3".into(), sigmas[2]);
    let x0 = analytics.trivial_state().to_vec();
    Ok(ModelPreset {
        id: PresetId::SisAdaptive,
        params: map,
        system,
        analytics: ModelAnalytics::Sis(analytics),
        x0,
        y0: vec![0.005],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn analytics() -> SisAnalytics {
        match sis_adaptive(SisParams::default()).unwrap().analytics {
            ModelAnalytics::Sis(a) => a,
            _ => unreachable!(),
        }
    }

    #[test]
    fn threshold_value() {
        let a = analytics();
        assert!((a.threshold - 0.0201).abs() < 1e-12);
    }

    #[test]
    fn jacobian_has_the_recovery_eigenvalue() {
        let a = analytics();
        for y in [0.005, 0.0201, 0.03] {
            let eigs = a.trivial_branch_jacobian(y).complex_eigenvalues();
            assert!(
                eigs.iter().any(|l| (l.re + a.r).abs() < 1e-12 && l.im.abs() < 1e-12),
                "missing -r at y={y}: {eigs:?}"
            );
        }
    }

    #[test]
    fn lower_block_degenerates_exactly_at_threshold() {
        let a = analytics();
        assert_eq!(a.lower_block_det(a.threshold), 0.0);
        assert!(a.lower_block_det(a.threshold - 1e-3) > 0.0);
        assert!(a.lower_block_det(a.threshold + 1e-3) < 0.0);
    }

    #[test]
    fn trivial_state_is_an_equilibrium() {
        let p = sis_adaptive(SisParams::default()).unwrap();
        let mut out = [0.0; 3];
        (p.system.drift)(&p.x0, &[0.01], &mut out);
        assert!(out.iter().all(|v| v.abs() < 1e-14), "{out:?}");
    }

    #[test]
    fn jacobian_matches_finite_differences_on_the_branch() {
        let p = sis_adaptive(SisParams::default()).unwrap();
        let a = analytics();
        let y = [0.015];
        let x0 = a.trivial_state();
        let jac = a.trivial_branch_jacobian(y[0]);
        let h = 1e-7;
        for j in 0..3 {
            let mut xp = x0;
            let mut xm = x0;
            xp[j] += h;
            xm[j] -= h;
            let mut fp = [0.0; 3];
            let mut fm = [0.0; 3];
            (p.system.drift)(&xp, &y, &mut fp);
            (p.system.drift)(&xm, &y, &mut fm);
            for i in 0..3 {
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                assert!(
                    (jac[(i, j)] - fd).abs() < 1e-6 * jac[(i, j)].abs().max(1.0),
                    "({i},{j}): {} vs {fd}",
                    jac[(i, j)]
                );
            }
        }
    }
}
