//! Least-squares scaling-law fits for variance curves.

use crate::error::{Error, Result};
use crate::stats;

/// Candidate scaling laws for `Var(x(y))`.
///
/// The `Rev` variants place the singularity above the data (`y` increasing
/// toward the transition), the plain variants below it. `Linear` is the
/// straight line `A (y - y_c)` used on reciprocal-transformed data; its
/// `y_c` is the root of the line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScalingLaw {
    /// `A / √(y - y_c)`
    InvSqrt,
    /// `A / (y - y_c)`
    Inv,
    /// `A / √(y_c - y)`
    InvSqrtRev,
    /// `A / (y_c - y)`
    InvRev,
    /// `A (y - y_c)`
    Linear,
}

impl ScalingLaw {
    pub const ALL: [ScalingLaw; 5] = [
        ScalingLaw::InvSqrt,
        ScalingLaw::Inv,
        ScalingLaw::InvSqrtRev,
        ScalingLaw::InvRev,
        ScalingLaw::Linear,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScalingLaw::InvSqrt => "inv-sqrt",
            ScalingLaw::Inv => "inv",
            ScalingLaw::InvSqrtRev => "inv-sqrt-rev",
            ScalingLaw::InvRev => "inv-rev",
            ScalingLaw::Linear => "linear",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        Self::ALL
            .iter()
            .copied()
            .find(|l| l.name() == norm)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scaling law '{s}'")))
    }

    /// Whether the singularity sits above the data (`y_c > max y`).
    fn reversed(self) -> bool {
        matches!(self, ScalingLaw::InvSqrtRev | ScalingLaw::InvRev)
    }

    fn model(self, y: f64, a: f64, y_c: f64) -> f64 {
        match self {
            ScalingLaw::InvSqrt => a / (y - y_c).sqrt(),
            ScalingLaw::Inv => a / (y - y_c),
            ScalingLaw::InvSqrtRev => a / (y_c - y).sqrt(),
            ScalingLaw::InvRev => a / (y_c - y),
            ScalingLaw::Linear => a * (y - y_c),
        }
    }

    /// Partial derivatives `(∂model/∂A, ∂model/∂y_c)`.
    fn gradient(self, y: f64, a: f64, y_c: f64) -> (f64, f64) {
        match self {
            ScalingLaw::InvSqrt => {
                let d = y - y_c;
                (d.powf(-0.5), 0.5 * a * d.powf(-1.5))
            }
            ScalingLaw::Inv => {
                let d = y - y_c;
                (1.0 / d, a / (d * d))
            }
            ScalingLaw::InvSqrtRev => {
                let d = y_c - y;
                (d.powf(-0.5), -0.5 * a * d.powf(-1.5))
            }
            ScalingLaw::InvRev => {
                let d = y_c - y;
                (1.0 / d, -a / (d * d))
            }
            ScalingLaw::Linear => (y - y_c, -a),
        }
    }
}

/// Fitted scaling law.
#[derive(Debug, Clone, Copy)]
pub struct ScalingFit {
    pub law: ScalingLaw,
    pub a: f64,
    pub y_c: f64,
    /// Residual sum of squares at the fitted parameters.
    pub rss: f64,
    pub converged: bool,
    pub iterations: u32,
}

fn rss_of(law: ScalingLaw, y: &[f64], v: &[f64], a: f64, y_c: f64) -> f64 {
    y.iter()
        .zip(v)
        .map(|(yy, vv)| {
            let r = vv - law.model(*yy, a, y_c);
            r * r
        })
        .sum()
}

/// Fits `V ≈ model(y; A, y_c)` by Levenberg–Marquardt.
///
/// `y_c` is seeded 10% of the data span beyond the extremum on the approach
/// side and `A` from the data point closest to the singularity. Steps that
/// would push `y_c` into the data range are rejected like any failed step
/// (damping ×10). The `Linear` law is solved in closed form.
pub fn fit_scaling(y: &[f64], v: &[f64], law: ScalingLaw) -> Result<ScalingFit> {
    if y.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            got: v.len(),
        });
    }
    if y.len() < 5 {
        return Err(Error::InvalidFitData(format!(
            "need at least 5 points, got {}",
            y.len()
        )));
    }
    if y.iter().chain(v.iter()).any(|x| !x.is_finite()) {
        return Err(Error::InvalidFitData("non-finite input".into()));
    }
    if law != ScalingLaw::Linear && v.iter().any(|vv| *vv <= 0.0) {
        return Err(Error::InvalidFitData(
            "reciprocal laws need strictly positive values".into(),
        ));
    }

    if law == ScalingLaw::Linear {
        let (slope, intercept) = stats::ols_line(y, v);
        let y_c = if slope != 0.0 {
            -intercept / slope
        } else {
            f64::INFINITY
        };
        let rss: f64 = y
            .iter()
            .zip(v)
            .map(|(yy, vv)| {
                let r = vv - (slope * yy + intercept);
                r * r
            })
            .sum();
        return Ok(ScalingFit {
            law,
            a: slope,
            y_c,
            rss,
            converged: true,
            iterations: 0,
        });
    }

    let y_min = y.iter().copied().fold(f64::INFINITY, f64::min);
    let y_max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = y_max - y_min;
    if span <= 0.0 {
        return Err(Error::InvalidFitData("degenerate y range".into()));
    }

    // seed y_c a fixed offset beyond the extremum on the approach side, A
    // from the data point closest to the singularity
    let (mut y_c, anchor_idx) = if law.reversed() {
        (
            y_max + 0.1 * span,
            y.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0,
        )
    } else {
        (
            y_min - 0.1 * span,
            y.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap().0,
        )
    };
    let gap = (y[anchor_idx] - y_c).abs();
    let mut a = match law {
        ScalingLaw::InvSqrt | ScalingLaw::InvSqrtRev => v[anchor_idx] * gap.sqrt(),
        _ => v[anchor_idx] * gap,
    };

    let admissible = |y_c: f64| {
        if law.reversed() {
            y_c > y_max
        } else {
            y_c < y_min
        }
    };

    let mut lambda = 1e-3;
    let mut rss = rss_of(law, y, v, a, y_c);
    let mut converged = false;
    let mut iterations = 0u32;
    let scale = v.iter().map(|x| x * x).sum::<f64>().max(f64::MIN_POSITIVE);

    while iterations < 200 {
        iterations += 1;
        // normal equations J^T J + λ diag(J^T J)
        let (mut jtj00, mut jtj01, mut jtj11) = (0.0, 0.0, 0.0);
        let (mut g0, mut g1) = (0.0, 0.0);
        for (yy, vv) in y.iter().zip(v) {
            let r = vv - law.model(*yy, a, y_c);
            let (da, dc) = law.gradient(*yy, a, y_c);
            jtj00 += da * da;
            jtj01 += da * dc;
            jtj11 += dc * dc;
            g0 += r * da;
            g1 += r * dc;
        }
        let grad_norm = (g0 * g0 + g1 * g1).sqrt();
        if grad_norm < 1e-12 * scale.max(1.0) {
            converged = true;
            break;
        }
        let m00 = jtj00 * (1.0 + lambda);
        let m11 = jtj11 * (1.0 + lambda);
        let det = m00 * m11 - jtj01 * jtj01;
        if det.abs() < f64::MIN_POSITIVE {
            break;
        }
        let da = (g0 * m11 - g1 * jtj01) / det;
        let dc = (g1 * m00 - g0 * jtj01) / det;
        let (a_new, y_c_new) = (a + da, y_c + dc);
        let accept = admissible(y_c_new) && {
            let new_rss = rss_of(law, y, v, a_new, y_c_new);
            if new_rss < rss {
                let step = da.abs().max(dc.abs());
                a = a_new;
                y_c = y_c_new;
                rss = new_rss;
                if step < 1e-14 * (1.0 + a.abs().max(y_c.abs())) {
                    converged = true;
                }
                true
            } else {
                false
            }
        };
        if converged {
            break;
        }
        if accept {
            lambda = (lambda / 10.0).max(1e-14);
        } else {
            lambda *= 10.0;
            if lambda > 1e14 {
                break;
            }
        }
    }
    Ok(ScalingFit {
        law,
        a,
        y_c,
        rss,
        converged,
        iterations,
    })
}

/// Fits every law in `laws` and ranks by residual sum of squares, ties by
/// fewer iterations. Laws whose preconditions reject the data are skipped.
pub fn compare_laws(y: &[f64], v: &[f64], laws: &[ScalingLaw]) -> Result<Vec<ScalingFit>> {
    let mut fits = Vec::new();
    for &law in laws {
        match fit_scaling(y, v, law) {
            Ok(f) => fits.push(f),
            Err(Error::InvalidFitData(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    if fits.is_empty() {
        return Err(Error::InvalidFitData("no law accepted the data".into()));
    }
    fits.sort_by(|a, b| {
        a.rss
            .total_cmp(&b.rss)
            .then(a.iterations.cmp(&b.iterations))
    });
    Ok(fits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::rng::CounterRng;
    use crate::stats::linspace;

    #[test]
    fn recovers_exact_inv_sqrt_model() {
        let y = linspace(0.0, 0.8, 60);
        let v: Vec<f64> = y.iter().map(|yy| 2.0 / (1.0 - yy).sqrt()).collect();
        let fit = fit_scaling(&y, &v, ScalingLaw::InvSqrtRev).unwrap();
        assert!((fit.a - 2.0).abs() < 1e-8, "{fit:?}");
        assert!((fit.y_c - 1.0).abs() < 1e-8, "{fit:?}");
    }

    #[test]
    fn recovers_exact_inv_model_below_data() {
        // V = 3/(y - 0.5) on y in [0.6, 1.4]
        let y = linspace(0.6, 1.4, 40);
        let v: Vec<f64> = y.iter().map(|yy| 3.0 / (yy - 0.5)).collect();
        let fit = fit_scaling(&y, &v, ScalingLaw::Inv).unwrap();
        assert!((fit.a - 3.0).abs() < 1e-7, "{fit:?}");
        assert!((fit.y_c - 0.5).abs() < 1e-8, "{fit:?}");
    }

    #[test]
    fn recovers_inv_rev_model() {
        let y = linspace(0.0, 0.4, 30);
        let v: Vec<f64> = y.iter().map(|yy| 3.0 / (0.5 - yy)).collect();
        let fit = fit_scaling(&y, &v, ScalingLaw::InvRev).unwrap();
        assert!((fit.a - 3.0).abs() < 1e-7);
        assert!((fit.y_c - 0.5).abs() < 1e-8);
    }

    #[test]
    fn shift_equivariance() {
        let y = linspace(0.1, 0.9, 25);
        let mut rng = CounterRng::new(5, 0);
        let v: Vec<f64> = y
            .iter()
            .map(|yy| 1.5 / (1.0 - yy).sqrt() * (1.0 + 0.01 * rng.standard_normal()))
            .collect();
        let base = fit_scaling(&y, &v, ScalingLaw::InvSqrtRev).unwrap();
        let c = 4.2;
        let shifted_y: Vec<f64> = y.iter().map(|yy| yy + c).collect();
        let shifted = fit_scaling(&shifted_y, &v, ScalingLaw::InvSqrtRev).unwrap();
        assert!((shifted.y_c - (base.y_c + c)).abs() < 1e-9, "{} vs {}", shifted.y_c, base.y_c + c);
        assert!((shifted.a - base.a).abs() < 1e-9);
        assert!((shifted.rss - base.rss).abs() < 1e-9 * base.rss.max(1e-30));
    }

    #[test]
    fn linear_law_reports_the_root() {
        let y = linspace(0.0, 1.0, 20);
        let v: Vec<f64> = y.iter().map(|yy| 2.0 * (yy - 0.3)).collect();
        let fit = fit_scaling(&y, &v, ScalingLaw::Linear).unwrap();
        assert!((fit.a - 2.0).abs() < 1e-12);
        assert!((fit.y_c - 0.3).abs() < 1e-12);
        assert!(fit.converged);
    }

    #[test]
    fn inverse_transform_agrees_with_direct_fit() {
        // fitting Inv to V and Linear to 1/V give consistent y_c
        let y = linspace(0.0, 0.35, 30);
        let mut rng = CounterRng::new(17, 0);
        let v: Vec<f64> = y
            .iter()
            .map(|yy| 2.0 / (0.5 - yy) * (1.0 + 0.002 * rng.standard_normal()))
            .collect();
        let direct = fit_scaling(&y, &v, ScalingLaw::InvRev).unwrap();
        let recip: Vec<f64> = v.iter().map(|vv| 1.0 / vv).collect();
        let line = fit_scaling(&y, &recip, ScalingLaw::Linear).unwrap();
        assert!(
            (direct.y_c - line.y_c).abs() / direct.y_c.abs() < 0.02,
            "direct {} vs line root {}",
            direct.y_c,
            line.y_c
        );
    }

    #[test]
    fn ranking_prefers_the_generating_law() {
        let y = linspace(0.0, 0.4, 40);
        let v: Vec<f64> = y.iter().map(|yy| 1.0 / (0.5 - yy)).collect();
        let ranked = compare_laws(&y, &v, &ScalingLaw::ALL).unwrap();
        assert_eq!(ranked[0].law, ScalingLaw::InvRev);
        let pos_inv = ranked.iter().position(|f| f.law == ScalingLaw::InvRev).unwrap();
        let pos_sqrt = ranked
            .iter()
            .position(|f| f.law == ScalingLaw::InvSqrtRev)
            .unwrap();
        assert!(pos_inv < pos_sqrt);
    }

    #[test]
    fn constant_data_ranks_linear_first() {
        let y = linspace(0.0, 1.0, 25);
        let mut rng = CounterRng::new(23, 0);
        let v: Vec<f64> = (0..25).map(|_| 1.0 + 1e-6 * rng.standard_normal()).collect();
        let ranked = compare_laws(&y, &v, &ScalingLaw::ALL).unwrap();
        assert_eq!(ranked[0].law, ScalingLaw::Linear);
        assert!(ranked[0].a.abs() < 1e-4);
    }

    #[test]
    fn rejects_nonpositive_data_for_reciprocal_laws() {
        let y = linspace(0.0, 1.0, 10);
        let v = vec![0.0; 10];
        assert!(matches!(
            fit_scaling(&y, &v, ScalingLaw::Inv),
            Err(Error::InvalidFitData(_))
        ));
    }

    #[test]
    fn rejects_short_series() {
        assert!(fit_scaling(&[0.0, 1.0], &[1.0, 2.0], ScalingLaw::Linear).is_err());
    }
}
