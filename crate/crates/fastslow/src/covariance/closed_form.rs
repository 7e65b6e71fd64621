//! Closed-form leading-order covariance per catalog entry.

use nalgebra::DMatrix;

use super::lyapunov::solve_lyapunov;
use super::{CovarianceMatrix, NoiseMatrix};
use crate::error::{Error, Result};
use crate::normal_forms::{self, BifurcationKind, NormalFormEntry};

fn check_sign(name: &str, v: f64) -> Result<()> {
    if v == 1.0 || v == -1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be ±1, got {v}")))
    }
}

/// Algebraic covariance for the Bogdanov-Takens linearization
/// `A = [[0, 1], [branch_sign·2√-y1, slot_sign·k√-y1]]`.
///
/// The off-diagonal entry is `-N11/2` for every sign combination. The
/// attracting branch is `(branch_sign, slot_sign) = (-1, -1)`; the other
/// combinations reproduce the printed sign variants of the closed form and
/// solve the same algebraic equation without being covariances of a stable
/// process.
pub fn bt_closed_form(
    y1: f64,
    k: f64,
    n: &DMatrix<f64>,
    branch_sign: f64,
    slot_sign: f64,
) -> Result<DMatrix<f64>> {
    check_sign("branch_sign", branch_sign)?;
    check_sign("slot_sign", slot_sign)?;
    if y1 >= 0.0 {
        return Err(Error::NotAttracting(format!("needs y1 < 0, got {y1}")));
    }
    if k <= 0.0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    if n.nrows() != 2 || n.ncols() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: n.nrows(),
        });
    }
    let r = (-y1).sqrt();
    let a = branch_sign * 2.0 * r;
    let b = slot_sign * k * r;
    let (n11, n12, n22) = (n[(0, 0)], n[(0, 1)], n[(1, 1)]);
    let v12 = -n11 / 2.0;
    let v22 = (a * n11 - n22) / (2.0 * b);
    let v11 = -(v22 + b * v12 + n12) / a;
    Ok(DMatrix::from_row_slice(2, 2, &[v11, v12, v12, v22]))
}

/// Hopf/Bautin closed form with rotation rate 1 and spiral rate `y < 0`.
fn hopf_closed_form(y: f64, n: &DMatrix<f64>) -> DMatrix<f64> {
    let (n11, n12, n22) = (n[(0, 0)], n[(0, 1)], n[(1, 1)]);
    let denom = 4.0 * y * (y * y + 1.0);
    let v11 = -(2.0 * n11 * y * y + 2.0 * n12 * y + n11 + n22) / denom;
    let v22 = -(2.0 * n22 * y * y - 2.0 * n12 * y + n11 + n22) / denom;
    let v12 = (n11 - n22 - 2.0 * n12 * y) / (4.0 * (y * y + 1.0));
    DMatrix::from_row_slice(2, 2, &[v11, v12, v12, v22])
}

/// Evaluates the closed-form leading-order covariance at a slow point.
///
/// Conventions per entry:
/// - fold: `y = [gap]` with `gap > 0`, the orientation in which the
///   attracting branch is `x = √gap`; the result is `N/(4√gap)`,
/// - transcritical/pitchfork: `y < 0` on the trivial branch, `-N/(2y)`,
/// - cusp: attracting-branch point, `-N/(2(y2 + 3 s h0²))`,
/// - hopf/bautin: full 2×2 closed form for `y (resp. y1) < 0`,
/// - bogdanov-takens: attracting realization of [`bt_closed_form`],
/// - fold-hopf/hopf-hopf: dense Lyapunov solve of the realized
///   linearization; constant noise required. Use [`scaling_exponents`] for
///   the predicted per-entry asymptotic orders.
pub fn covariance_closed_form(
    entry: &NormalFormEntry,
    y: &[f64],
    noise: &NoiseMatrix,
) -> Result<CovarianceMatrix> {
    if y.len() != entry.slow_dim {
        return Err(Error::DimensionMismatch {
            expected: entry.slow_dim,
            got: y.len(),
        });
    }
    if noise.dim() != entry.fast_dim {
        return Err(Error::DimensionMismatch {
            expected: entry.fast_dim,
            got: noise.dim(),
        });
    }
    let n = noise.eval(y)?;
    let matrix = match entry.kind {
        BifurcationKind::Fold => {
            let gap = y[0];
            if gap <= 0.0 {
                return Err(Error::NotAttracting(format!(
                    "fold closed form takes the gap to the fold (> 0), got {gap}"
                )));
            }
            DMatrix::from_element(1, 1, n[(0, 0)] / (4.0 * gap.sqrt()))
        }
        BifurcationKind::Transcritical | BifurcationKind::Pitchfork => {
            if y[0] >= 0.0 {
                return Err(Error::NotAttracting(format!("needs y < 0, got {}", y[0])));
            }
            DMatrix::from_element(1, 1, -n[(0, 0)] / (2.0 * y[0]))
        }
        BifurcationKind::Cusp => {
            let a0 = normal_forms::linearization_a0(entry, y)?[(0, 0)];
            DMatrix::from_element(1, 1, -n[(0, 0)] / (2.0 * a0))
        }
        BifurcationKind::Hopf | BifurcationKind::Bautin => {
            if y[0] >= 0.0 {
                return Err(Error::NotAttracting(format!("needs y1 < 0, got {}", y[0])));
            }
            hopf_closed_form(y[0], &n)
        }
        BifurcationKind::BogdanovTakens => bt_closed_form(y[0], entry.aux.k, &n, -1.0, -1.0)?,
        BifurcationKind::FoldHopf | BifurcationKind::HopfHopf => {
            if !noise.is_constant() {
                return Err(Error::InvalidArgument(
                    "fold-hopf/hopf-hopf covariance assumes constant noise".into(),
                ));
            }
            let a0 = normal_forms::linearization_a0(entry, y)?;
            solve_lyapunov(&a0, &n)?
        }
    };
    Ok(CovarianceMatrix {
        matrix,
        y: y.to_vec(),
        order: 0,
    })
}

/// Predicted asymptotic order exponent of each covariance entry under
/// constant noise, along the standard approach ray.
///
/// The ray is `gap = t → 0⁺` for the fold, `y = -t` for the other scalar and
/// codimension-one entries, `y = (0, -t)` for the cusp and `y = (-t, -t)`
/// for the remaining codimension-two entries. An exponent `p` means the
/// entry scales like `t^p`; `0` marks entries tending to a (possibly zero)
/// constant. The exponents follow from the realized linearizations and are
/// cross-checked against dense Lyapunov solves in the verification suite.
pub fn scaling_exponents(entry: &NormalFormEntry) -> DMatrix<f64> {
    match entry.kind {
        BifurcationKind::Fold => DMatrix::from_element(1, 1, -0.5),
        BifurcationKind::Transcritical | BifurcationKind::Pitchfork | BifurcationKind::Cusp => {
            DMatrix::from_element(1, 1, -1.0)
        }
        BifurcationKind::Hopf | BifurcationKind::Bautin => {
            DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -1.0])
        }
        BifurcationKind::BogdanovTakens => {
            DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -0.5])
        }
        BifurcationKind::FoldHopf => {
            // realized rotation block decays like θ√-y1, so every entry it
            // controls scales with t^{-1/2} on the diagonal
            #[rustfmt::skip]
            let m = DMatrix::from_row_slice(3, 3, &[
                -0.5, 0.0,  0.0,
                 0.0, -0.5, 0.0,
                 0.0, 0.0, -0.5,
            ]);
            m
        }
        BifurcationKind::HopfHopf => {
            let mut m = DMatrix::zeros(4, 4);
            for i in 0..4 {
                m[(i, i)] = -1.0;
            }
            m
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::lyapunov::solve_lyapunov_unchecked;
    use crate::sde::rng::CounterRng;
    use crate::stats::{geomspace, log_log_slope};

    fn identity_noise(m: usize) -> NoiseMatrix {
        NoiseMatrix::constant(DMatrix::identity(m, m)).unwrap()
    }

    #[test]
    fn fold_gap_form_matches_lyapunov() {
        let e = NormalFormEntry::new(BifurcationKind::Fold);
        let x = covariance_closed_form(&e, &[0.25], &identity_noise(1)).unwrap();
        assert!((x.matrix[(0, 0)] - 0.5).abs() < 1e-14);
        let a = DMatrix::from_element(1, 1, -2.0 * 0.25f64.sqrt());
        let lyap = solve_lyapunov(&a, &DMatrix::identity(1, 1)).unwrap();
        assert!((x.matrix[(0, 0)] - lyap[(0, 0)]).abs() < 1e-14);
    }

    #[test]
    fn hopf_identity_noise_is_diagonal() {
        let e = NormalFormEntry::new(BifurcationKind::Hopf);
        let x = covariance_closed_form(&e, &[-0.1], &identity_noise(2)).unwrap();
        assert!((x.matrix[(0, 0)] - 5.0).abs() < 1e-12);
        assert!((x.matrix[(1, 1)] - 5.0).abs() < 1e-12);
        assert_eq!(x.matrix[(0, 1)], 0.0);
    }

    #[test]
    fn bt_off_diagonal_is_minus_half_n11() {
        let e = NormalFormEntry::new(BifurcationKind::BogdanovTakens);
        for y1 in [-0.5, -0.1, -0.01] {
            let x = covariance_closed_form(&e, &[y1, -1.0], &identity_noise(2)).unwrap();
            assert!((x.matrix[(0, 1)] + 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn bt_printed_sign_variants_solve_the_algebraic_equation() {
        let n = DMatrix::from_row_slice(2, 2, &[1.3, 0.2, 0.2, 0.7]);
        let y1: f64 = -0.3;
        let k = 0.8;
        let r = (-y1).sqrt();
        for branch in [-1.0, 1.0] {
            for slot in [-1.0, 1.0] {
                let x = bt_closed_form(y1, k, &n, branch, slot).unwrap();
                let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, branch * 2.0 * r, slot * k * r]);
                let alg = solve_lyapunov_unchecked(&a, &n).unwrap();
                assert!((&x - &alg).amax() <= 1e-12 * alg.amax(), "{branch} {slot}");
            }
        }
    }

    #[test]
    fn closed_forms_agree_with_lyapunov_oracle() {
        let mut rng = CounterRng::new(0xC0FFEE, 0);
        for kind in [
            BifurcationKind::Fold,
            BifurcationKind::Transcritical,
            BifurcationKind::Pitchfork,
            BifurcationKind::Cusp,
            BifurcationKind::Hopf,
            BifurcationKind::Bautin,
            BifurcationKind::BogdanovTakens,
        ] {
            let e = NormalFormEntry::new(kind);
            let m = e.fast_dim;
            for t in geomspace(1e-4, 0.5, 8) {
                let y = match kind {
                    BifurcationKind::Fold => vec![t],
                    BifurcationKind::Cusp => vec![0.0, -t],
                    _ if e.slow_dim == 1 => vec![-t],
                    _ => vec![-t, -t],
                };
                for _ in 0..3 {
                    let g = DMatrix::from_fn(m, m, |_, _| rng.standard_normal());
                    let nmat = &g * g.transpose() + DMatrix::<f64>::identity(m, m) * 0.1;
                    let noise = NoiseMatrix::constant(nmat.clone()).unwrap();
                    let closed = covariance_closed_form(&e, &y, &noise).unwrap().matrix;
                    let a0 = if kind == BifurcationKind::Fold {
                        DMatrix::from_element(1, 1, -2.0 * t.sqrt())
                    } else {
                        normal_forms::linearization_a0(&e, &y).unwrap()
                    };
                    let oracle = solve_lyapunov(&a0, &nmat).unwrap();
                    let rel = (&closed - &oracle).amax() / oracle.amax();
                    assert!(rel <= 1e-10, "{kind:?} at {y:?}: rel {rel:.3e}");
                }
            }
        }
    }

    #[test]
    fn exponents_match_numeric_slopes() {
        // regression of each nonzero-limit entry over a geometric approach grid
        let ts = geomspace(1e-6, 1e-3, 12);
        for e in crate::normal_forms::catalog() {
            let noise = identity_noise(e.fast_dim);
            let expo = scaling_exponents(&e);
            let m = e.fast_dim;
            let mut series = vec![Vec::new(); m * m];
            for &t in &ts {
                let y = match e.kind {
                    BifurcationKind::Fold => vec![t],
                    BifurcationKind::Cusp => vec![0.0, -t],
                    _ if e.slow_dim == 1 => vec![-t],
                    _ => vec![-t, -t],
                };
                let x = covariance_closed_form(&e, &y, &noise).unwrap().matrix;
                for i in 0..m {
                    for j in 0..m {
                        series[i * m + j].push(x[(i, j)].abs());
                    }
                }
            }
            for i in 0..m {
                for j in 0..m {
                    let vals = &series[i * m + j];
                    let predicted = expo[(i, j)];
                    if predicted < 0.0 {
                        let slope = log_log_slope(&ts, vals);
                        assert!(
                            (slope - predicted).abs() < 0.05,
                            "{:?} entry ({i},{j}): slope {slope:.3} vs {predicted}",
                            e.kind
                        );
                    } else {
                        // constant-order entries stay bounded
                        let max = vals.iter().cloned().fold(0.0, f64::max);
                        assert!(max.is_finite());
                    }
                }
            }
        }
    }

    #[test]
    fn multiplicative_hopf_noise_flattens_the_diagonal() {
        let e = NormalFormEntry::new(BifurcationKind::Hopf);
        let (c1, c2) = (-1.0, -2.0);
        let noise = NoiseMatrix::from_fn(2, move |y| {
            DMatrix::from_row_slice(2, 2, &[c1 * y[0], 0.0, 0.0, c2 * y[0]])
        });
        let limit = -(c1 + c2) / 4.0;
        for t in geomspace(1e-6, 1e-3, 6) {
            let x = covariance_closed_form(&e, &[-t], &noise).unwrap().matrix;
            assert!((x[(0, 0)] - limit).abs() <= 10.0 * t * t + 1e-14);
            assert!((x[(1, 1)] - limit).abs() <= 10.0 * t * t + 1e-14);
            // off-diagonal decays linearly: (c1 - c2) y / 4
            assert!((x[(0, 1)] - (c1 - c2) * (-t) / 4.0).abs() <= 1e-3 * t);
        }
    }
}
