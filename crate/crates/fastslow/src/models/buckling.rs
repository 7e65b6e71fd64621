//! Compressed-spring buckling instability: a subcritical pitchfork with
//! quintic saturation and selectable multiplicative noise shapes.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::{ModelAnalytics, ModelPreset, PresetId};
use crate::error::Result;
use crate::sde::FastSlowSystem;

/// Noise amplitude as a function of the gap to the pitchfork.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseShape {
    /// `F(y) = 1`: variance grows like `1/(y_c - y)`.
    Const,
    /// `F(y) = √(y_c - y)`: variance stays bounded.
    SqrtGap,
    /// `F(y) = y_c - y`: variance decays like `y_c - y`.
    LinearGap,
}

impl NoiseShape {
    pub const ALL: [NoiseShape; 3] = [NoiseShape::Const, NoiseShape::SqrtGap, NoiseShape::LinearGap];

    pub fn name(self) -> &'static str {
        match self {
            NoiseShape::Const => "const",
            NoiseShape::SqrtGap => "sqrt-gap",
            NoiseShape::LinearGap => "linear-gap",
        }
    }

    pub fn parse(s: &str) -> crate::error::Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        Self::ALL
            .iter()
            .copied()
            .find(|n| n.name() == norm)
            .ok_or_else(|| {
                crate::error::Error::InvalidArgument(format!("unknown noise shape '{s}'"))
            })
    }

    /// Predicted exponent of `Var(x(y))` in the gap `y_c - y`
    /// (`N(y)/gap = F²/gap` to leading order).
    pub fn predicted_gap_exponent(self) -> f64 {
        match self {
            NoiseShape::Const => -1.0,
            NoiseShape::SqrtGap => 0.0,
            NoiseShape::LinearGap => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BucklingParams {
    pub p1: f64,
    /// Pitchfork location in the applied force.
    pub p2: f64,
    pub p3: f64,
    pub p4: f64,
    pub eps: f64,
    pub sigma: f64,
}

impl Default for BucklingParams {
    fn default() -> Self {
        BucklingParams {
            p1: 2.639,
            p2: 3.3,
            p3: 106.512,
            p4: 385.0,
            eps: 0.005,
            sigma: 0.007,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BucklingAnalytics {
    pub params: BucklingParams,
    pub shape: NoiseShape,
    /// Subcritical pitchfork on the trivial branch.
    pub pitchfork_y: f64,
    /// Where the three noise shapes coincide (`F ≡ 1` ⇔ gap = 1).
    pub shape_crossing_y: f64,
}

impl BucklingAnalytics {
    /// Fast linearization on the trivial branch, `p1 (y - p2)`.
    pub fn trivial_linearization(&self, y: f64) -> f64 {
        self.params.p1 * (y - self.params.p2)
    }

    /// Leading-order variance prediction `σ² F(y)² / (2 p1 (p2 - y))`.
    pub fn predicted_variance(&self, y: f64) -> f64 {
        let gap = self.params.p2 - y;
        if gap <= 0.0 {
            return f64::INFINITY;
        }
        let f2 = match self.shape {
            NoiseShape::Const => 1.0,
            NoiseShape::SqrtGap => gap,
            NoiseShape::LinearGap => gap * gap,
        };
        self.params.sigma * self.params.sigma * f2 / (2.0 * self.params.p1 * gap)
    }
}

/// Builds the buckling preset on the trivial branch with the selected noise
/// shape; the gap factors are cut off at zero past the pitchfork.
pub fn euler_buckling(params: BucklingParams, shape: NoiseShape) -> Result<ModelPreset> {
    let BucklingParams { p1, p2, p3, p4, eps, sigma } = params;
    let drift = Arc::new(move |x: &[f64], y: &[f64], out: &mut [f64]| {
        let x2 = x[0] * x[0];
        out[0] = p1 * (y[0] - p2) * x[0] + p3 * x2 * x[0] - p4 * x2 * x2 * x[0];
    });
    let diffusion: crate::sde::VecField = match shape {
        NoiseShape::Const => Arc::new(|_, _, out: &mut [f64]| out[0] = 1.0),
        NoiseShape::SqrtGap => Arc::new(move |_, y: &[f64], out: &mut [f64]| {
            out[0] = (p2 - y[0]).max(0.0).sqrt();
        }),
        NoiseShape::LinearGap => Arc::new(move |_, y: &[f64], out: &mut [f64]| {
            out[0] = (p2 - y[0]).max(0.0);
        }),
    };
    let system = FastSlowSystem::new(
        1,
        1,
        1,
        eps,
        sigma,
        drift,
        Arc::new(|_, _, out| out[0] = 1.0),
        diffusion,
    )?;
    let analytics = BucklingAnalytics {
        params,
        shape,
        pitchfork_y: p2,
        shape_crossing_y: p2 - 1.0,
    };
    let mut map = BTreeMap::new();
    map.insert("p1".into(), p1);
    map.insert("p2".into(), p2);
    map.insert("p3".into(), p3);
    map.insert("p4".into(), p4);
    map.insert("eps".into(), eps);
    map.insert("sigma".into(), sigma);
    Ok(ModelPreset {
        id: PresetId::EulerBuckling,
        params: map,
        system,
        analytics: ModelAnalytics::Buckling(analytics),
        x0: vec![0.0],
        y0: vec![2.0],
    })
}
