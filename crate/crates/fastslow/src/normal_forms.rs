//! Catalog of fast-subsystem bifurcation normal forms up to codimension two.
//!
//! Each entry carries the polynomial normal-form vector field, the
//! linearization `A0(y)` along the attracting branch of the critical
//! manifold, and the slow-flow conditions under which the bifurcation is a
//! critical transition (a tipping point reached along an attracting branch,
//! followed by a fast departure).
//!
//! Sign conventions follow the case analysis behind each classification rule,
//! not the condensed summary table: the cusp tips for `s = +1`, the
//! Bogdanov-Takens `s = -1` case requires `g1 = 0` and `g2 > 0`, and the
//! Bautin threshold reads `∂g2/∂y2 < 1/2`. Where a strict case analysis does
//! not cover a boundary equality (for example a vanishing slow drift at a
//! fold), the classifier answers [`Transition::Indeterminate`] rather than
//! guessing.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// The nine cataloged fast-subsystem bifurcations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BifurcationKind {
    Fold,
    Transcritical,
    Pitchfork,
    Cusp,
    Hopf,
    Bautin,
    BogdanovTakens,
    FoldHopf,
    HopfHopf,
}

impl BifurcationKind {
    pub const ALL: [BifurcationKind; 9] = [
        BifurcationKind::Fold,
        BifurcationKind::Transcritical,
        BifurcationKind::Pitchfork,
        BifurcationKind::Hopf,
        BifurcationKind::Cusp,
        BifurcationKind::Bautin,
        BifurcationKind::BogdanovTakens,
        BifurcationKind::FoldHopf,
        BifurcationKind::HopfHopf,
    ];

    /// Fast dimension `m` of the normal form.
    pub fn fast_dim(self) -> usize {
        match self {
            Self::Fold | Self::Transcritical | Self::Pitchfork | Self::Cusp => 1,
            Self::Hopf | Self::Bautin | Self::BogdanovTakens => 2,
            Self::FoldHopf => 3,
            Self::HopfHopf => 4,
        }
    }

    /// Slow dimension `n` (= codimension of the bifurcation).
    pub fn slow_dim(self) -> usize {
        match self {
            Self::Fold | Self::Transcritical | Self::Pitchfork | Self::Hopf => 1,
            _ => 2,
        }
    }

    pub fn codimension(self) -> usize {
        self.slow_dim()
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Fold => "fold",
            Self::Transcritical => "transcritical",
            Self::Pitchfork => "pitchfork",
            Self::Cusp => "cusp",
            Self::Hopf => "hopf",
            Self::Bautin => "bautin",
            Self::BogdanovTakens => "bogdanov-takens",
            Self::FoldHopf => "fold-hopf",
            Self::HopfHopf => "hopf-hopf",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.name() == norm)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown bifurcation kind '{s}'")))
    }
}

/// Auxiliary normal-form parameters.
///
/// Only the fields relevant to a given kind are read; the defaults select the
/// tipping-capable variants (subcritical pitchfork/Hopf, `l2 > 0` Bautin).
#[derive(Debug, Clone, PartialEq)]
pub struct AuxParams {
    /// Cubic/quadratic sign `s = ±1` (pitchfork, cusp, Bogdanov-Takens, fold-Hopf).
    pub s: f64,
    /// First Lyapunov coefficient (Hopf).
    pub l1: f64,
    /// Second Lyapunov coefficient `±1` (Bautin).
    pub l2: f64,
    /// `θ(0)` for the fold-Hopf coupling term.
    pub theta0: f64,
    /// Fold-Hopf rotation frequency, nonzero.
    pub omega: f64,
    /// Hopf-Hopf frequencies, nonzero and non-resonant.
    pub omega1: f64,
    pub omega2: f64,
    /// Coefficient realizing the `O(√-y1)` slot of the Bogdanov-Takens
    /// linearization as `-k√-y1`, `k > 0`.
    pub k: f64,
    /// Hopf-Hopf cubic coefficients `p_ij`.
    pub hh_p: [[f64; 2]; 2],
    /// Hopf-Hopf quintic signs `s_1, s_2 = ±1`.
    pub hh_s: [f64; 2],
}

impl Default for AuxParams {
    fn default() -> Self {
        AuxParams {
            s: 1.0,
            l1: 1.0,
            l2: 1.0,
            theta0: 1.0,
            omega: 1.0,
            omega1: 1.0,
            omega2: std::f64::consts::SQRT_2,
            k: 1.0,
            hh_p: [[-1.0, -1.0], [-1.0, -1.0]],
            hh_s: [-1.0, -1.0],
        }
    }
}

/// One cataloged fast-subsystem bifurcation.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormEntry {
    pub kind: BifurcationKind,
    pub fast_dim: usize,
    pub slow_dim: usize,
    pub aux: AuxParams,
}

impl NormalFormEntry {
    pub fn new(kind: BifurcationKind) -> Self {
        NormalFormEntry {
            kind,
            fast_dim: kind.fast_dim(),
            slow_dim: kind.slow_dim(),
            aux: AuxParams::default(),
        }
    }

    pub fn with_aux(kind: BifurcationKind, aux: AuxParams) -> Self {
        NormalFormEntry {
            kind,
            fast_dim: kind.fast_dim(),
            slow_dim: kind.slow_dim(),
            aux,
        }
    }

    /// Bogdanov-Takens with the quadratic-coupling sign `s`.
    pub fn bogdanov_takens(s: f64) -> Self {
        let mut e = Self::new(BifurcationKind::BogdanovTakens);
        e.aux.s = s;
        e
    }

    /// Pitchfork; `s = +1` subcritical, `s = -1` supercritical.
    pub fn pitchfork(s: f64) -> Self {
        let mut e = Self::new(BifurcationKind::Pitchfork);
        e.aux.s = s;
        e
    }

    /// Hopf with first Lyapunov coefficient `l1` (`l1 > 0` subcritical).
    pub fn hopf(l1: f64) -> Self {
        let mut e = Self::new(BifurcationKind::Hopf);
        e.aux.l1 = l1;
        e
    }

    /// Cusp with cubic sign `s`.
    pub fn cusp(s: f64) -> Self {
        let mut e = Self::new(BifurcationKind::Cusp);
        e.aux.s = s;
        e
    }
}

/// Slow-flow data at the bifurcation point used by the classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct SlowFlowData {
    /// `g(0,0)`; length must match the entry's slow dimension.
    pub g: Vec<f64>,
    /// `∂g2/∂y2(0,0)`, read by the Bautin and Bogdanov-Takens conditions.
    pub dg2_dy2: f64,
    /// `y2`-component of the tangent to the cycle blow-up curve (fold-Hopf);
    /// rarely available, hence optional.
    pub j2: Option<f64>,
}

impl SlowFlowData {
    pub fn scalar(g: f64) -> Self {
        SlowFlowData {
            g: vec![g],
            dg2_dy2: 0.0,
            j2: None,
        }
    }

    pub fn planar(g1: f64, g2: f64) -> Self {
        SlowFlowData {
            g: vec![g1, g2],
            dg2_dy2: 0.0,
            j2: None,
        }
    }

    pub fn with_dg2_dy2(mut self, d: f64) -> Self {
        self.dg2_dy2 = d;
        self
    }

    pub fn with_j2(mut self, j2: f64) -> Self {
        self.j2 = Some(j2);
        self
    }
}

/// Classifier verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transition {
    Critical,
    NotCritical,
    Indeterminate,
}

impl std::fmt::Display for Transition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Transition::Critical => "Critical",
            Transition::NotCritical => "NotCritical",
            Transition::Indeterminate => "Indeterminate",
        };
        f.write_str(s)
    }
}

/// Verdict plus the governing decision rule, for reporting.
#[derive(Debug, Clone)]
pub struct Classification {
    pub verdict: Transition,
    pub rule: &'static str,
}

/// The full catalog, ordered by codimension then fast dimension.
pub fn catalog() -> Vec<NormalFormEntry> {
    BifurcationKind::ALL
        .iter()
        .map(|&k| NormalFormEntry::new(k))
        .collect()
}

fn check_dims(entry: &NormalFormEntry, x_len: usize, y_len: usize) -> Result<()> {
    if x_len != entry.fast_dim {
        return Err(Error::DimensionMismatch {
            expected: entry.fast_dim,
            got: x_len,
        });
    }
    if y_len != entry.slow_dim {
        return Err(Error::DimensionMismatch {
            expected: entry.slow_dim,
            got: y_len,
        });
    }
    Ok(())
}

fn check_sign_param(name: &str, v: f64) -> Result<()> {
    if v == 1.0 || v == -1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be +1 or -1, got {v}")))
    }
}

/// Rejects `k·ω1 ≈ l·ω2` for `k + l ≤ 3` (and zero frequencies).
fn check_nonresonant(omega1: f64, omega2: f64) -> Result<()> {
    if omega1 == 0.0 || omega2 == 0.0 {
        return Err(Error::InvalidArgument(
            "hopf-hopf frequencies must be nonzero".into(),
        ));
    }
    let scale = omega1.abs() + omega2.abs();
    for (k, l) in [(1u32, 1u32), (1, 2), (2, 1)] {
        if (k as f64 * omega1 - l as f64 * omega2).abs() <= 1e-9 * scale {
            return Err(Error::Resonance { k, l });
        }
    }
    Ok(())
}

/// Evaluates the normal-form fast vector field at `(x, y)`.
pub fn fast_vector_field(entry: &NormalFormEntry, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    check_dims(entry, x.len(), y.len())?;
    let a = &entry.aux;
    let out = match entry.kind {
        BifurcationKind::Fold => vec![-y[0] - x[0] * x[0]],
        BifurcationKind::Transcritical => vec![y[0] * x[0] - x[0] * x[0]],
        BifurcationKind::Pitchfork => {
            check_sign_param("s", a.s)?;
            vec![y[0] * x[0] + a.s * x[0] * x[0] * x[0]]
        }
        BifurcationKind::Cusp => {
            check_sign_param("s", a.s)?;
            vec![y[0] + y[1] * x[0] + a.s * x[0] * x[0] * x[0]]
        }
        BifurcationKind::Hopf => {
            let r2 = x[0] * x[0] + x[1] * x[1];
            vec![
                y[0] * x[0] - x[1] + a.l1 * x[0] * r2,
                x[0] + y[0] * x[1] + a.l1 * x[1] * r2,
            ]
        }
        BifurcationKind::Bautin => {
            check_sign_param("l2", a.l2)?;
            let r2 = x[0] * x[0] + x[1] * x[1];
            vec![
                y[0] * x[0] - x[1] + y[1] * x[0] * r2 + a.l2 * x[0] * r2 * r2,
                x[0] + y[0] * x[1] + y[1] * x[1] * r2 + a.l2 * x[1] * r2 * r2,
            ]
        }
        BifurcationKind::BogdanovTakens => {
            check_sign_param("s", a.s)?;
            vec![x[1], y[0] + y[1] * x[1] + x[0] * x[0] + a.s * x[0] * x[1]]
        }
        BifurcationKind::FoldHopf => {
            check_sign_param("s", a.s)?;
            if a.omega == 0.0 {
                return Err(Error::InvalidArgument("omega must be nonzero".into()));
            }
            let th = a.theta0;
            let (x1, x2, x3) = (x[0], x[1], x[2]);
            vec![
                y[0] + x1 * x1 + a.s * (x2 * x2 + x3 * x3),
                y[1] * x2 - a.omega * x3 + th * x1 * x2 - x1 * x3 + x1 * x1 * x2,
                a.omega * x2 + y[1] * x3 + x1 * x2 + th * x1 * x3 + x1 * x1 * x3,
            ]
        }
        BifurcationKind::HopfHopf => {
            check_nonresonant(a.omega1, a.omega2)?;
            check_sign_param("s1", a.hh_s[0])?;
            check_sign_param("s2", a.hh_s[1])?;
            // polar form mapped to Cartesian: (x1,x2) carries (r1, θ1),
            // (x3,x4) carries (r2, θ2)
            let r1sq = x[0] * x[0] + x[1] * x[1];
            let r2sq = x[2] * x[2] + x[3] * x[3];
            let p = &a.hh_p;
            let a1 = y[0] + p[0][0] * r1sq + p[0][1] * r2sq + a.hh_s[0] * r2sq * r2sq;
            let a2 = y[1] + p[1][0] * r1sq + p[1][1] * r2sq + a.hh_s[1] * r1sq * r1sq;
            vec![
                x[0] * a1 - a.omega1 * x[1],
                x[1] * a1 + a.omega1 * x[0],
                x[2] * a2 - a.omega2 * x[3],
                x[3] * a2 + a.omega2 * x[2],
            ]
        }
    };
    Ok(out)
}

/// The attracting critical-manifold branch `h0(y)` whose linearization the
/// catalog records.
pub fn critical_manifold_branch(entry: &NormalFormEntry, y: &[f64]) -> Result<Vec<f64>> {
    check_dims(entry, entry.fast_dim, y.len())?;
    match entry.kind {
        BifurcationKind::Fold => {
            if y[0] >= 0.0 {
                return Err(Error::NoAttractingBranch);
            }
            Ok(vec![(-y[0]).sqrt()])
        }
        BifurcationKind::Transcritical | BifurcationKind::Pitchfork => {
            if y[0] >= 0.0 {
                return Err(Error::NoAttractingBranch);
            }
            Ok(vec![0.0])
        }
        BifurcationKind::Cusp => {
            check_sign_param("s", entry.aux.s)?;
            cusp_attracting_root(entry.aux.s, y[0], y[1]).map(|x| vec![x])
        }
        BifurcationKind::Hopf | BifurcationKind::Bautin => {
            if y[0] >= 0.0 {
                return Err(Error::NoAttractingBranch);
            }
            Ok(vec![0.0, 0.0])
        }
        BifurcationKind::BogdanovTakens => {
            if y[0] >= 0.0 {
                return Err(Error::NoAttractingBranch);
            }
            Ok(vec![-(-y[0]).sqrt(), 0.0])
        }
        BifurcationKind::FoldHopf => {
            if y[0] >= 0.0 {
                return Err(Error::NoAttractingBranch);
            }
            Ok(vec![-(-y[0]).sqrt(), 0.0, 0.0])
        }
        BifurcationKind::HopfHopf => {
            if y[0] >= 0.0 || y[1] >= 0.0 {
                return Err(Error::NoAttractingBranch);
            }
            Ok(vec![0.0; 4])
        }
    }
}

/// Real roots of `t^3 + p t + q = 0` (closed form, multiplicity tolerance 1e-12).
fn depressed_cubic_roots(p: f64, q: f64) -> Vec<f64> {
    let disc = -4.0 * p * p * p - 27.0 * q * q;
    // the discriminant carries the scale of p^3 and q^2
    let scale = (p.abs().powi(3)).max(q * q);
    if scale == 0.0 {
        return vec![0.0];
    }
    let tol = 1e-12 * scale;
    if disc > tol {
        // three distinct real roots, trigonometric form (p < 0 here)
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let phi = arg.acos();
        (0..3)
            .map(|k| m * ((phi - 2.0 * std::f64::consts::PI * k as f64) / 3.0).cos())
            .collect()
    } else if disc < -tol {
        // one real root, Cardano
        let half_q = q / 2.0;
        let d = (half_q * half_q + p * p * p / 27.0).sqrt();
        let u = (-half_q + d).cbrt();
        let v = (-half_q - d).cbrt();
        vec![u + v]
    } else if p.abs() <= 1e-12 * scale.cbrt() {
        vec![0.0]
    } else {
        // double root a, simple root b = -2a
        let a = -3.0 * q / (2.0 * p);
        vec![a, -2.0 * a]
    }
}

/// Unique attracting root of the cusp fast subsystem `s x^3 + y2 x + y1 = 0`.
fn cusp_attracting_root(s: f64, y1: f64, y2: f64) -> Result<f64> {
    // multiply through by s (s^2 = 1) to get x^3 + (s y2) x + (s y1) = 0
    let roots = depressed_cubic_roots(s * y2, s * y1);
    let stable: Vec<f64> = roots
        .into_iter()
        .filter(|&x| y2 + 3.0 * s * x * x < 0.0)
        .collect();
    match stable.len() {
        1 => Ok(stable[0]),
        0 => Err(Error::NoAttractingBranch),
        _ => Err(Error::NotAttracting(
            "multiple attracting cusp branches; the branch through the tip is ambiguous".into(),
        )),
    }
}

/// Linearization `A0(y)` of the fast drift along the attracting branch.
///
/// Bounded placeholder slots are realized as stated in the catalog: the cusp
/// uses the exact `y2 + 3 s h0(y)^2`, the Bogdanov-Takens `O(√-y1)` slot
/// becomes `-k√-y1`, and the fold-Hopf rotation block carries `-θ(0)√-y1` on
/// its diagonal (requires `θ(0) > 0` for an attracting realization).
pub fn linearization_a0(entry: &NormalFormEntry, y: &[f64]) -> Result<DMatrix<f64>> {
    check_dims(entry, entry.fast_dim, y.len())?;
    let a = &entry.aux;
    match entry.kind {
        BifurcationKind::Fold => {
            if y[0] >= 0.0 {
                return Err(Error::NotAttracting(format!("fold branch needs y < 0, got {}", y[0])));
            }
            Ok(DMatrix::from_element(1, 1, -2.0 * (-y[0]).sqrt()))
        }
        BifurcationKind::Transcritical | BifurcationKind::Pitchfork => {
            if y[0] >= 0.0 {
                return Err(Error::NotAttracting(format!(
                    "trivial branch attracts only for y < 0, got {}",
                    y[0]
                )));
            }
            Ok(DMatrix::from_element(1, 1, y[0]))
        }
        BifurcationKind::Cusp => {
            let x = cusp_attracting_root(a.s, y[0], y[1])?;
            Ok(DMatrix::from_element(1, 1, y[1] + 3.0 * a.s * x * x))
        }
        BifurcationKind::Hopf | BifurcationKind::Bautin => {
            if y[0] >= 0.0 {
                return Err(Error::NotAttracting(format!(
                    "spiral branch attracts only for y1 < 0, got {}",
                    y[0]
                )));
            }
            Ok(DMatrix::from_row_slice(2, 2, &[y[0], -1.0, 1.0, y[0]]))
        }
        BifurcationKind::BogdanovTakens => {
            if y[0] >= 0.0 {
                return Err(Error::NotAttracting(format!("needs y1 < 0, got {}", y[0])));
            }
            if a.k <= 0.0 {
                return Err(Error::InvalidArgument("k must be positive".into()));
            }
            let r = (-y[0]).sqrt();
            Ok(DMatrix::from_row_slice(
                2,
                2,
                &[0.0, 1.0, -2.0 * r, -a.k * r],
            ))
        }
        BifurcationKind::FoldHopf => {
            if y[0] >= 0.0 {
                return Err(Error::NotAttracting(format!("needs y1 < 0, got {}", y[0])));
            }
            if a.theta0 <= 0.0 {
                return Err(Error::InvalidArgument(
                    "the attracting-branch realization needs theta0 > 0".into(),
                ));
            }
            let r = (-y[0]).sqrt();
            if y[1] >= a.theta0 * r {
                return Err(Error::NotAttracting(format!(
                    "needs y2 < theta0*sqrt(-y1) = {:.6}, got {}",
                    a.theta0 * r,
                    y[1]
                )));
            }
            let d = -a.theta0 * r;
            let w = a.omega;
            #[rustfmt::skip]
            let m = DMatrix::from_row_slice(3, 3, &[
                -2.0 * r, 0.0, 0.0,
                0.0,      d,   -w,
                0.0,      w,    d,
            ]);
            Ok(m)
        }
        BifurcationKind::HopfHopf => {
            check_nonresonant(a.omega1, a.omega2)?;
            if y[0] >= 0.0 || y[1] >= 0.0 {
                return Err(Error::NotAttracting(
                    "needs y1 < 0 and y2 < 0".into(),
                ));
            }
            let (w1, w2) = (a.omega1, a.omega2);
            #[rustfmt::skip]
            let m = DMatrix::from_row_slice(4, 4, &[
                y[0], -w1,  0.0,  0.0,
                w1,   y[0], 0.0,  0.0,
                0.0,  0.0,  y[1], -w2,
                0.0,  0.0,  w2,   y[1],
            ]);
            Ok(m)
        }
    }
}

/// Classifies whether the entry's bifurcation is a critical transition under
/// the given slow-flow data, together with the governing rule.
///
/// Strict case splits decide `Critical`/`NotCritical`; boundary equalities
/// the case analysis does not cover come back `Indeterminate`. Comparisons
/// are exact on the supplied data.
pub fn classify(entry: &NormalFormEntry, slow: &SlowFlowData) -> Result<Classification> {
    if slow.g.len() != entry.slow_dim {
        return Err(Error::DimensionMismatch {
            expected: entry.slow_dim,
            got: slow.g.len(),
        });
    }
    let a = &entry.aux;
    let g = &slow.g;
    let c = |verdict, rule| Classification { verdict, rule };
    use Transition::*;

    let out = match entry.kind {
        BifurcationKind::Fold => {
            if g[0] > 0.0 {
                c(Critical, "fold: slow drift pushes into the fold (g > 0)")
            } else if g[0] < 0.0 {
                c(NotCritical, "fold: slow drift moves away from the fold (g < 0)")
            } else {
                c(Indeterminate, "fold: slow drift vanishes at the fold; not covered")
            }
        }
        BifurcationKind::Transcritical => {
            if g[0] != 0.0 {
                c(Critical, "transcritical: any nonzero slow drift crosses the exchange point")
            } else {
                c(Indeterminate, "transcritical: slow drift vanishes; not covered")
            }
        }
        BifurcationKind::Pitchfork => {
            check_sign_param("s", a.s)?;
            if a.s < 0.0 {
                c(
                    NotCritical,
                    "pitchfork: the supercritical case (s = -1) keeps the origin stable",
                )
            } else if g[0] > 0.0 {
                c(Critical, "pitchfork: subcritical (s = +1) with inward slow drift (g > 0)")
            } else if g[0] < 0.0 {
                c(NotCritical, "pitchfork: slow drift moves away (g < 0)")
            } else {
                c(Indeterminate, "pitchfork: slow drift vanishes; not covered")
            }
        }
        BifurcationKind::Cusp => {
            check_sign_param("s", a.s)?;
            if a.s < 0.0 {
                c(NotCritical, "cusp: s = -1 keeps the tip stable; never critical")
            } else if g[0] == 0.0 && g[1] > 0.0 {
                c(Critical, "cusp: s = +1 tips iff g1 = 0 and g2 > 0")
            } else {
                c(NotCritical, "cusp: s = +1 tips iff g1 = 0 and g2 > 0")
            }
        }
        BifurcationKind::Hopf => {
            if a.l1 < 0.0 {
                c(
                    NotCritical,
                    "hopf: supercritical (l1 < 0) generates stable cycles; never critical",
                )
            } else if a.l1 == 0.0 {
                c(Indeterminate, "hopf: l1 = 0 is degenerate (bautin case)")
            } else if g[0] > 0.0 {
                c(Critical, "hopf: subcritical (l1 > 0) with inward slow drift (g > 0)")
            } else if g[0] < 0.0 {
                c(NotCritical, "hopf: slow drift moves away (g < 0)")
            } else {
                c(Indeterminate, "hopf: slow drift vanishes; not covered")
            }
        }
        BifurcationKind::Bautin => {
            if a.l2 < 0.0 {
                c(NotCritical, "bautin: l2 < 0 keeps the origin stable; never critical")
            } else if a.l2 == 0.0 {
                c(Indeterminate, "bautin: l2 = 0 is degenerate")
            } else if g[0] > 0.0 && (g[1] != 0.0 || slow.dg2_dy2 < 0.5) {
                c(
                    Critical,
                    "bautin: l2 > 0, g1 > 0 and (g2 != 0 or g2 = 0 with dg2/dy2 < 1/2)",
                )
            } else {
                c(
                    NotCritical,
                    "bautin: l2 > 0, g1 > 0 and (g2 != 0 or g2 = 0 with dg2/dy2 < 1/2)",
                )
            }
        }
        BifurcationKind::BogdanovTakens => {
            check_sign_param("s", a.s)?;
            if a.s < 0.0 {
                if g[1] > 0.0 && g[0] == 0.0 {
                    c(Critical, "bogdanov-takens s = -1: tips iff g2 > 0 and g1 = 0")
                } else {
                    c(NotCritical, "bogdanov-takens s = -1: tips iff g2 > 0 and g1 = 0")
                }
            } else if g[0] > 0.0 || (g[0] == 0.0 && g[1] > 0.0 && slow.dg2_dy2 < -2.0) {
                c(
                    Critical,
                    "bogdanov-takens s = +1: tips iff g1 > 0, or g1 = 0, g2 > 0, dg2/dy2 < -2",
                )
            } else {
                c(
                    NotCritical,
                    "bogdanov-takens s = +1: tips iff g1 > 0, or g1 = 0, g2 > 0, dg2/dy2 < -2",
                )
            }
        }
        BifurcationKind::FoldHopf => {
            check_sign_param("s", a.s)?;
            if a.theta0 == 0.0 {
                c(Indeterminate, "fold-hopf: theta(0) = 0 is degenerate")
            } else if a.theta0 > 0.0 && a.s > 0.0 {
                if g[0] > 0.0 || (g[0] == 0.0 && g[1] > 0.0) {
                    c(Critical, "fold-hopf theta > 0, s = +1: tips iff g1 > 0, or g1 = 0 and g2 > 0")
                } else {
                    c(
                        NotCritical,
                        "fold-hopf theta > 0, s = +1: tips iff g1 > 0, or g1 = 0 and g2 > 0",
                    )
                }
            } else if a.theta0 > 0.0 {
                // s = -1: needs g1 > 0 and g2 below the cycle blow-up tangent
                if g[0] <= 0.0 {
                    c(NotCritical, "fold-hopf theta > 0, s = -1: tips iff g1 > 0 and g2 < J2")
                } else {
                    match slow.j2 {
                        Some(j2) if g[1] < j2 => {
                            c(Critical, "fold-hopf theta > 0, s = -1: tips iff g1 > 0 and g2 < J2")
                        }
                        Some(_) => c(
                            NotCritical,
                            "fold-hopf theta > 0, s = -1: tips iff g1 > 0 and g2 < J2",
                        ),
                        None => c(
                            Indeterminate,
                            "fold-hopf theta > 0, s = -1: J2 (cycle blow-up tangent) unavailable",
                        ),
                    }
                }
            } else if g[0] == 0.0 && g[1] > 0.0 {
                c(Critical, "fold-hopf theta < 0: tips iff g1 = 0 and g2 > 0")
            } else {
                c(NotCritical, "fold-hopf theta < 0: tips iff g1 = 0 and g2 > 0")
            }
        }
        BifurcationKind::HopfHopf => c(
            Indeterminate,
            "hopf-hopf: only special cases are classified; no general rule",
        ),
    };
    Ok(out)
}

/// Convenience wrapper returning just the verdict.
pub fn classify_transition(entry: &NormalFormEntry, slow: &SlowFlowData) -> Result<Transition> {
    classify(entry, slow).map(|c| c.verdict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn entry(kind: BifurcationKind) -> NormalFormEntry {
        NormalFormEntry::new(kind)
    }

    #[test]
    fn catalog_has_nine_entries_in_stable_order() {
        let cat = catalog();
        assert_eq!(cat.len(), 9);
        assert_eq!(cat[0].kind, BifurcationKind::Fold);
        assert_eq!((cat[0].fast_dim, cat[0].slow_dim), (1, 1));
        // codimension is non-decreasing, fast dimension non-decreasing within
        for w in cat.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            assert!(a.slow_dim <= b.slow_dim);
            if a.slow_dim == b.slow_dim {
                assert!(a.fast_dim <= b.fast_dim);
            }
        }
    }

    #[test]
    fn vector_field_vanishes_at_bifurcation_point() {
        for e in catalog() {
            let x = vec![0.0; e.fast_dim];
            let y = vec![0.0; e.slow_dim];
            let f = fast_vector_field(&e, &x, &y).unwrap();
            assert!(f.iter().all(|v| *v == 0.0), "{:?}", e.kind);
        }
    }

    #[test]
    fn vector_field_spot_values() {
        // fold on the critical manifold
        let f = fast_vector_field(&entry(BifurcationKind::Fold), &[0.5], &[-0.25]).unwrap();
        assert_eq!(f[0], 0.0);
        // cusp manifold point: 0 + (-1)(1) + 1 = 0
        let f = fast_vector_field(&entry(BifurcationKind::Cusp), &[1.0], &[0.0, -1.0]).unwrap();
        assert_eq!(f[0], 0.0);
        // hopf origin is an equilibrium for every y
        let f = fast_vector_field(&entry(BifurcationKind::Hopf), &[0.0, 0.0], &[0.3]).unwrap();
        assert_eq!(f, vec![0.0, 0.0]);
    }

    #[test]
    fn vector_field_rejects_dimension_mismatch() {
        let e = entry(BifurcationKind::Hopf);
        assert!(fast_vector_field(&e, &[0.0], &[0.0]).is_err());
        assert!(fast_vector_field(&e, &[0.0, 0.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn linearization_spot_values() {
        let a = linearization_a0(&entry(BifurcationKind::Fold), &[-0.25]).unwrap();
        assert!((a[(0, 0)] + 1.0).abs() < 1e-15);

        let a = linearization_a0(&entry(BifurcationKind::Hopf), &[-0.1]).unwrap();
        assert_eq!(a[(0, 0)], -0.1);
        assert_eq!(a[(0, 1)], -1.0);
        assert_eq!(a[(1, 0)], 1.0);
        assert_eq!(a[(1, 1)], -0.1);

        let mut e = entry(BifurcationKind::FoldHopf);
        e.aux.omega = 2.0;
        let a = linearization_a0(&e, &[-0.04, -0.1]).unwrap();
        assert!((a[(0, 0)] + 0.4).abs() < 1e-15);
        assert_eq!(a[(1, 2)], -2.0);
        assert_eq!(a[(2, 1)], 2.0);
    }

    #[test]
    fn linearization_rejects_repelling_side() {
        assert!(matches!(
            linearization_a0(&entry(BifurcationKind::Fold), &[0.1]),
            Err(Error::NotAttracting(_))
        ));
        assert!(linearization_a0(&entry(BifurcationKind::Hopf), &[0.05]).is_err());
    }

    #[test]
    fn branch_spot_values() {
        let b = critical_manifold_branch(&entry(BifurcationKind::Fold), &[-0.25]).unwrap();
        assert!((b[0] - 0.5).abs() < 1e-15);
        let b = critical_manifold_branch(&entry(BifurcationKind::Pitchfork), &[-0.3]).unwrap();
        assert_eq!(b[0], 0.0);
        // cusp: x = 0 solves y1 + y2 x + x^3 with y = (0, -3), and y2 + 3x^2 = -3 < 0
        let b = critical_manifold_branch(&entry(BifurcationKind::Cusp), &[0.0, -3.0]).unwrap();
        assert!(b[0].abs() < 1e-12);
    }

    #[test]
    fn cusp_root_is_the_stable_one() {
        // y = (0.1, -3): roots of x^3 - 3x + 0.1; the middle root is stable
        let e = entry(BifurcationKind::Cusp);
        let x = critical_manifold_branch(&e, &[0.1, -3.0]).unwrap()[0];
        let f = fast_vector_field(&e, &[x], &[0.1, -3.0]).unwrap()[0];
        assert!(f.abs() < 1e-12);
        assert!(-3.0 + 3.0 * x * x < 0.0);
    }

    #[test]
    fn cusp_outside_region_has_no_attracting_branch() {
        // y2 > 0 with s = +1: D_x f = y2 + 3x^2 > 0 at every root
        assert!(matches!(
            critical_manifold_branch(&entry(BifurcationKind::Cusp), &[0.0, 1.0]),
            Err(Error::NoAttractingBranch)
        ));
    }

    /// Central finite-difference Jacobian of the fast vector field.
    fn numeric_jacobian(e: &NormalFormEntry, x: &[f64], y: &[f64]) -> DMatrix<f64> {
        let m = e.fast_dim;
        let mut jac = DMatrix::zeros(m, m);
        for j in 0..m {
            let h = 1e-5 * x[j].abs().max(1.0);
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[j] += h;
            xm[j] -= h;
            let fp = fast_vector_field(e, &xp, y).unwrap();
            let fm = fast_vector_field(e, &xm, y).unwrap();
            for i in 0..m {
                jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        jac
    }

    fn attracting_y_grid(kind: BifurcationKind) -> Vec<Vec<f64>> {
        let ts = [0.9, 0.5, 0.2, 0.05, 0.01];
        match kind.slow_dim() {
            1 => ts.iter().map(|t| vec![-t]).collect(),
            _ => match kind {
                BifurcationKind::Cusp => ts.iter().map(|t| vec![0.3 * t * t, -t]).collect(),
                _ => ts.iter().map(|t| vec![-t, -t]).collect(),
            },
        }
    }

    #[test]
    fn linearization_matches_numeric_jacobian_where_exact() {
        // entries whose recorded A0 is the exact Jacobian on the branch
        for kind in [
            BifurcationKind::Fold,
            BifurcationKind::Transcritical,
            BifurcationKind::Pitchfork,
            BifurcationKind::Cusp,
            BifurcationKind::Hopf,
            BifurcationKind::Bautin,
        ] {
            let e = entry(kind);
            for y in attracting_y_grid(kind) {
                let h0 = critical_manifold_branch(&e, &y).unwrap();
                let a0 = linearization_a0(&e, &y).unwrap();
                let fd = numeric_jacobian(&e, &h0, &y);
                let denom = a0.amax().max(1e-12);
                assert!(
                    (&a0 - &fd).amax() / denom <= 1e-6,
                    "{kind:?} at {y:?}: {a0} vs {fd}"
                );
            }
        }
    }

    #[test]
    fn realized_linearizations_share_eigenvalue_signs_with_jacobian() {
        // Bogdanov-Takens and fold-Hopf realize bounded slots; only the
        // stability signs are required to agree with the true Jacobian.
        for kind in [BifurcationKind::BogdanovTakens, BifurcationKind::FoldHopf] {
            let e = entry(kind);
            for y in attracting_y_grid(kind) {
                // keep y2 well below the attracting-side bound
                let mut y = y.clone();
                y[1] = -(-y[0]).sqrt() * 2.0;
                let h0 = critical_manifold_branch(&e, &y).unwrap();
                let a0 = linearization_a0(&e, &y).unwrap();
                let fd = numeric_jacobian(&e, &h0, &y);
                let max_re_a0 = a0
                    .complex_eigenvalues()
                    .iter()
                    .map(|l| l.re)
                    .fold(f64::NEG_INFINITY, f64::max);
                let max_re_fd = fd
                    .complex_eigenvalues()
                    .iter()
                    .map(|l| l.re)
                    .fold(f64::NEG_INFINITY, f64::max);
                assert!(max_re_a0 < 0.0, "{kind:?} realized not Hurwitz at {y:?}");
                assert!(max_re_fd < 0.0, "{kind:?} Jacobian not Hurwitz at {y:?}");
            }
        }
    }

    #[test]
    fn attracting_linearizations_are_hurwitz() {
        for e in catalog() {
            for y in attracting_y_grid(e.kind) {
                let y = if e.kind == BifurcationKind::FoldHopf {
                    vec![y[0], -(-y[0]).sqrt() * 2.0]
                } else {
                    y
                };
                let a0 = linearization_a0(&e, &y).unwrap();
                let max_re = a0
                    .complex_eigenvalues()
                    .iter()
                    .map(|l| l.re)
                    .fold(f64::NEG_INFINITY, f64::max);
                assert!(max_re < 0.0, "{:?} at {:?}: max Re = {}", e.kind, y, max_re);
            }
        }
    }

    #[test]
    fn classify_spot_cases() {
        use Transition::*;
        let t = |e: &NormalFormEntry, s: &SlowFlowData| classify_transition(e, s).unwrap();

        assert_eq!(t(&entry(BifurcationKind::Fold), &SlowFlowData::scalar(1.0)), Critical);
        assert_eq!(
            t(&NormalFormEntry::pitchfork(-1.0), &SlowFlowData::scalar(1.0)),
            NotCritical
        );
        assert_eq!(
            t(&entry(BifurcationKind::Cusp), &SlowFlowData::planar(0.0, 0.5)),
            Critical
        );
        assert_eq!(
            t(&NormalFormEntry::hopf(-1.0), &SlowFlowData::scalar(1.0)),
            NotCritical
        );
        assert_eq!(
            t(&entry(BifurcationKind::HopfHopf), &SlowFlowData::planar(1.0, 1.0)),
            Indeterminate
        );
    }

    #[test]
    fn classify_rejects_dimension_mismatch() {
        assert!(classify_transition(&entry(BifurcationKind::Cusp), &SlowFlowData::scalar(1.0)).is_err());
    }

    proptest! {
        // Scaling the slow-flow data by λ > 0 never changes a verdict decided
        // purely by signs. The threshold cases (bautin with g2 = 0, BT s = +1
        // with g1 = 0) compare a derivative against a fixed constant and are
        // deliberately excluded.
        #[test]
        fn classification_is_scale_invariant_on_sign_cases(
            lambda in 1e-3..1e3f64,
            g1 in -2.0..2.0f64,
            g2 in -2.0..2.0f64,
            j2 in -1.0..1.0f64,
        ) {
            for e in catalog() {
                let base = if e.slow_dim == 1 {
                    SlowFlowData::scalar(g1)
                } else {
                    SlowFlowData::planar(g1, g2).with_j2(j2)
                };
                let threshold_case = match e.kind {
                    BifurcationKind::Bautin => g2 == 0.0,
                    BifurcationKind::BogdanovTakens => g1 == 0.0,
                    _ => false,
                };
                if threshold_case {
                    continue;
                }
                let scaled = SlowFlowData {
                    g: base.g.iter().map(|v| v * lambda).collect(),
                    dg2_dy2: base.dg2_dy2 * lambda,
                    j2: base.j2.map(|v| v * lambda),
                };
                prop_assert_eq!(
                    classify_transition(&e, &base).unwrap(),
                    classify_transition(&e, &scaled).unwrap(),
                    "kind {:?}", e.kind
                );
            }
        }

        // Fold/Hopf/pitchfork verdicts read only the scalar drift; the
        // planar-only fields must never matter.
        #[test]
        fn scalar_entries_ignore_unused_slow_fields(
            g in -2.0..2.0f64,
            dg in -5.0..5.0f64,
            j2 in -5.0..5.0f64,
        ) {
            for e in [
                entry(BifurcationKind::Fold),
                NormalFormEntry::pitchfork(1.0),
                NormalFormEntry::hopf(1.0),
            ] {
                let plain = SlowFlowData::scalar(g);
                let noisy = SlowFlowData {
                    g: vec![g],
                    dg2_dy2: dg,
                    j2: Some(j2),
                };
                prop_assert_eq!(
                    classify_transition(&e, &plain).unwrap(),
                    classify_transition(&e, &noisy).unwrap()
                );
            }
        }
    }

    #[test]
    fn hopf_hopf_rejects_resonance() {
        let mut e = entry(BifurcationKind::HopfHopf);
        e.aux.omega1 = 1.0;
        e.aux.omega2 = 2.0; // 2*omega1 == omega2
        assert!(matches!(
            linearization_a0(&e, &[-0.1, -0.1]),
            Err(Error::Resonance { .. })
        ));
    }
}
