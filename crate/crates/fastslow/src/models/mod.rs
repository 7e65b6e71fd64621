//! Application systems as ready-made fast-slow presets.
//!
//! Each preset couples the stochastic system with the analytic structure the
//! experiments rely on: critical-manifold parametrizations, fold/Hopf/
//! transcritical thresholds, two-parameter bifurcation curves and noise-shape
//! variants. Default parameters reproduce the published model values.

mod activator_inhibitor;
mod bazykin;
mod buckling;
mod sis;
mod stommel;
mod sweep;

pub use activator_inhibitor::{
    activator_inhibitor, goldbeter_koshland, goldbeter_koshland_du, AiAnalytics, AiParams,
};
pub use bazykin::{bazykin, BazykinAnalytics, BazykinParams};
pub use buckling::{euler_buckling, BucklingAnalytics, BucklingParams, NoiseShape};
pub use sis::{sis_adaptive, SisAnalytics, SisParams};
pub use stommel::{stommel_cessi, StommelAnalytics, StommelParams};
pub use sweep::{equilibrium_branch_sweep, BranchEvent, EquilibriumBranch, EventKind, Stability};

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::normal_forms::{self, NormalFormEntry};
use crate::sde::FastSlowSystem;

/// Preset identifiers for the CLI and experiment specs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetId {
    StommelCessi,
    SisAdaptive,
    ActivatorInhibitor,
    Bazykin,
    EulerBuckling,
}

impl PresetId {
    pub const ALL: [PresetId; 5] = [
        PresetId::StommelCessi,
        PresetId::SisAdaptive,
        PresetId::ActivatorInhibitor,
        PresetId::Bazykin,
        PresetId::EulerBuckling,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PresetId::StommelCessi => "stommel",
            PresetId::SisAdaptive => "sis",
            PresetId::ActivatorInhibitor => "activator-inhibitor",
            PresetId::Bazykin => "bazykin",
            PresetId::EulerBuckling => "buckling",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        match norm.as_str() {
            "stommel" | "stommel-cessi" => Ok(PresetId::StommelCessi),
            "sis" | "sis-adaptive" => Ok(PresetId::SisAdaptive),
            "activator-inhibitor" | "ai" => Ok(PresetId::ActivatorInhibitor),
            "bazykin" => Ok(PresetId::Bazykin),
            "buckling" | "euler-buckling" => Ok(PresetId::EulerBuckling),
            _ => Err(Error::InvalidArgument(format!("unknown preset '{s}'"))),
        }
    }
}

/// Model-specific analytic structure.
#[derive(Debug, Clone)]
pub enum ModelAnalytics {
    Stommel(StommelAnalytics),
    Sis(SisAnalytics),
    ActivatorInhibitor(AiAnalytics),
    Bazykin(BazykinAnalytics),
    Buckling(BucklingAnalytics),
}

/// A built preset: system, named parameters, analytics and the default
/// initial condition on the attracting branch.
#[derive(Debug, Clone)]
pub struct ModelPreset {
    pub id: PresetId,
    pub params: BTreeMap<String, f64>,
    pub system: FastSlowSystem,
    pub analytics: ModelAnalytics,
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
}

/// Builds a preset by id with its default parameters.
pub fn preset_by_id(id: PresetId) -> Result<ModelPreset> {
    build_preset(id, &BTreeMap::new(), NoiseShape::Const)
}

/// Builds a preset with named parameter overrides (unknown keys rejected).
/// `shape` selects the noise form for the buckling preset and is ignored by
/// the others.
pub fn build_preset(
    id: PresetId,
    overrides: &BTreeMap<String, f64>,
    shape: NoiseShape,
) -> Result<ModelPreset> {
    let get = |p: &mut f64, key: &str, seen: &mut Vec<String>| {
        if let Some(v) = overrides.get(key) {
            *p = *v;
            seen.push(key.to_string());
        }
    };
    let mut seen = Vec::new();
    let preset = match id {
        PresetId::StommelCessi => {
            let mut p = StommelParams::default();
            get(&mut p.eta2, "eta2", &mut seen);
            get(&mut p.eps, "eps", &mut seen);
            get(&mut p.sigma, "sigma", &mut seen);
            stommel_cessi(p)?
        }
        PresetId::SisAdaptive => {
            let mut p = SisParams::default();
            get(&mut p.r, "r", &mut seen);
            get(&mut p.w, "w", &mut seen);
            get(&mut p.mu, "mu", &mut seen);
            get(&mut p.eps, "eps", &mut seen);
            get(&mut p.sigmas[0], "sigma1", &mut seen);
            get(&mut p.sigmas[1], "sigma2", &mut seen);
            get(&mut p.sigmas[2], "sigma3", &mut seen);
            if let Some(s) = overrides.get("sigma") {
                p.sigmas = [*s; 3];
                seen.push("sigma".into());
            }
            sis_adaptive(p)?
        }
        PresetId::ActivatorInhibitor => {
            let mut p = AiParams::default();
            for i in 0..8 {
                get(&mut p.k[i], &format!("k{i}"), &mut seen);
            }
            get(&mut p.j1, "j1", &mut seen);
            get(&mut p.j2, "j2", &mut seen);
            get(&mut p.eps, "eps", &mut seen);
            get(&mut p.sigma, "sigma", &mut seen);
            get(&mut p.n11, "n11", &mut seen);
            get(&mut p.n12, "n12", &mut seen);
            get(&mut p.n22, "n22", &mut seen);
            activator_inhibitor(p)?
        }
        PresetId::Bazykin => {
            let mut p = BazykinParams::default();
            get(&mut p.gamma, "gamma", &mut seen);
            get(&mut p.xi, "xi", &mut seen);
            get(&mut p.eps, "eps", &mut seen);
            get(&mut p.sigmas[0], "sigma1", &mut seen);
            get(&mut p.sigmas[1], "sigma2", &mut seen);
            if let Some(s) = overrides.get("sigma") {
                p.sigmas = [*s; 2];
                seen.push("sigma".into());
            }
            bazykin(p)?
        }
        PresetId::EulerBuckling => {
            let mut p = BucklingParams::default();
            get(&mut p.p1, "p1", &mut seen);
            get(&mut p.p2, "p2", &mut seen);
            get(&mut p.p3, "p3", &mut seen);
            get(&mut p.p4, "p4", &mut seen);
            get(&mut p.eps, "eps", &mut seen);
            get(&mut p.sigma, "sigma", &mut seen);
            euler_buckling(p, shape)?
        }
    };
    for key in overrides.keys() {
        if !seen.contains(key) {
            return Err(Error::InvalidArgument(format!(
                "preset '{}' has no parameter '{key}'",
                id.name()
            )));
        }
    }
    Ok(preset)
}

/// Wraps a normal-form entry as a simulable system with constant slow drift
/// `g` and constant diffusion matrix `f_matrix` (`m×k`, row-major).
pub fn normal_form_system(
    entry: &NormalFormEntry,
    g: Vec<f64>,
    eps: f64,
    sigma: f64,
    f_matrix: Vec<f64>,
    noise_dim: usize,
) -> Result<FastSlowSystem> {
    if g.len() != entry.slow_dim {
        return Err(Error::DimensionMismatch {
            expected: entry.slow_dim,
            got: g.len(),
        });
    }
    if f_matrix.len() != entry.fast_dim * noise_dim {
        return Err(Error::DimensionMismatch {
            expected: entry.fast_dim * noise_dim,
            got: f_matrix.len(),
        });
    }
    let e = entry.clone();
    let drift = Arc::new(move |x: &[f64], y: &[f64], out: &mut [f64]| {
        match normal_forms::fast_vector_field(&e, x, y) {
            Ok(f) => out.copy_from_slice(&f),
            Err(_) => out.fill(f64::NAN),
        }
    });
    let slow = Arc::new(move |_: &[f64], _: &[f64], out: &mut [f64]| {
        out.copy_from_slice(&g);
    });
    let diff = Arc::new(move |_: &[f64], _: &[f64], out: &mut [f64]| {
        out.copy_from_slice(&f_matrix);
    });
    FastSlowSystem::new(
        entry.fast_dim,
        entry.slow_dim,
        noise_dim,
        eps,
        sigma,
        drift,
        slow,
        diff,
    )
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite 2×2
/// noise matrix, used to turn a target `N` into a diffusion `F`.
pub(crate) fn cholesky_2x2(n11: f64, n12: f64, n22: f64) -> Result<[f64; 4]> {
    if n11 <= 0.0 {
        return Err(Error::InvalidNoise("n11 must be positive".into()));
    }
    let l11 = n11.sqrt();
    let l21 = n12 / l11;
    let rest = n22 - l21 * l21;
    if rest < 0.0 {
        return Err(Error::InvalidNoise("matrix is not positive semi-definite".into()));
    }
    Ok([l11, 0.0, l21, rest.sqrt()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::{euler_maruyama, SimConfig};

    /// Noiseless presets must ride their attracting branches: the fast state
    /// stays within O(eps) of the branch point over a short slow window.
    #[test]
    fn deterministic_presets_track_their_branches() {
        for id in PresetId::ALL {
            let mut preset = preset_by_id(id).unwrap();
            preset.system.sigma = 0.0;
            let eps = preset.system.eps;
            let (dt, window) = (eps / 10.0, 40.0 * eps);
            let config = SimConfig::new(dt, window, 1, 0, 1);
            let path =
                euler_maruyama(&preset.system, &config, &preset.x0, &preset.y0, 0).unwrap();
            let branch_at = |y: &[f64]| -> Vec<f64> {
                match &preset.analytics {
                    ModelAnalytics::Stommel(a) => vec![a.upper_branch_x(y[0]).unwrap()],
                    ModelAnalytics::Sis(a) => a.trivial_state().to_vec(),
                    ModelAnalytics::ActivatorInhibitor(a) => {
                        let x1 = a.equilibrium_x1(y[0]).unwrap();
                        vec![x1, a.manifold_ratio() * x1]
                    }
                    ModelAnalytics::Bazykin(a) => {
                        let (x1, x2) = a.equilibrium_at(y, 3.2).unwrap();
                        vec![x1, x2]
                    }
                    ModelAnalytics::Buckling(_) => vec![0.0],
                }
            };
            let last = path.len() - 1;
            let branch = branch_at(path.y_at(last));
            let scale: f64 = branch.iter().map(|b| b.abs()).fold(1.0, f64::max);
            for (x, b) in path.x_at(last).iter().zip(&branch) {
                assert!(
                    (x - b).abs() <= 50.0 * eps * scale,
                    "{}: {x} vs branch {b} (eps {eps})",
                    id.name()
                );
            }
        }
    }

    #[test]
    fn build_preset_rejects_unknown_overrides() {
        let mut bad = BTreeMap::new();
        bad.insert("not_a_param".to_string(), 1.0);
        assert!(build_preset(PresetId::StommelCessi, &bad, NoiseShape::Const).is_err());
    }

    #[test]
    fn build_preset_applies_overrides() {
        let mut ov = BTreeMap::new();
        ov.insert("eps".to_string(), 0.25);
        ov.insert("sigma".to_string(), 0.5);
        let p = build_preset(PresetId::StommelCessi, &ov, NoiseShape::Const).unwrap();
        assert_eq!(p.system.eps, 0.25);
        assert_eq!(p.system.sigma, 0.5);
    }
}
