//! Newton continuation of fast-subsystem equilibria along a slow path, with
//! stability classification and eigenvalue-crossing detection.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::sde::FastSlowSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Attracting,
    Repelling,
    Saddle,
    NonHyperbolic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// Real part of a complex pair crosses zero (`|Im| > 1e-6` at the crossing).
    HopfCrossing,
    /// A real eigenvalue crosses zero.
    ZeroEigenvalue,
    /// Newton continuation failed (typically a fold passage).
    BranchTerminated,
}

#[derive(Debug, Clone)]
pub struct BranchEvent {
    /// Slow point of the event.
    pub y: Vec<f64>,
    pub kind: EventKind,
}

/// Continued equilibrium branch along a sampled slow path.
#[derive(Debug, Clone)]
pub struct EquilibriumBranch {
    pub y_grid: Vec<Vec<f64>>,
    pub x_values: Vec<Vec<f64>>,
    pub stability: Vec<Stability>,
    pub events: Vec<BranchEvent>,
}

const HYPERBOLICITY_TOL: f64 = 1e-9;

fn drift_vec(system: &FastSlowSystem, x: &[f64], y: &[f64]) -> DVector<f64> {
    let mut out = vec![0.0; system.fast_dim];
    (system.drift)(x, y, &mut out);
    DVector::from_vec(out)
}

fn fd_jacobian(system: &FastSlowSystem, x: &[f64], y: &[f64]) -> DMatrix<f64> {
    let m = system.fast_dim;
    let mut jac = DMatrix::zeros(m, m);
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    for j in 0..m {
        let h = 1e-7 * x[j].abs().max(1.0);
        xp[j] = x[j] + h;
        xm[j] = x[j] - h;
        let fp = drift_vec(system, &xp, y);
        let fm = drift_vec(system, &xm, y);
        for i in 0..m {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
        xp[j] = x[j];
        xm[j] = x[j];
    }
    jac
}

fn newton_solve(system: &FastSlowSystem, x_seed: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let mut x = DVector::from_vec(x_seed.to_vec());
    let scale = 1.0 + x.amax();
    for _ in 0..60 {
        let f = drift_vec(system, x.as_slice(), y);
        let jac = fd_jacobian(system, x.as_slice(), y);
        let step = jac
            .lu()
            .solve(&f)
            .ok_or_else(|| Error::NoConvergence("singular jacobian in continuation".into()))?;
        x -= &step;
        if !x.iter().all(|v| v.is_finite()) || x.amax() > 1e8 * scale {
            return Err(Error::NoConvergence("newton diverged".into()));
        }
        if step.amax() <= 1e-12 * (1.0 + x.amax()) {
            let res = drift_vec(system, x.as_slice(), y).amax();
            if res <= 1e-9 * scale {
                return Ok(x.as_slice().to_vec());
            }
        }
    }
    Err(Error::NoConvergence("newton stalled".into()))
}

/// `(max real part, |Im| of the eigenvalue attaining it)`.
fn leading_eigenvalue(system: &FastSlowSystem, x: &[f64], y: &[f64]) -> (f64, f64) {
    let eigs = fd_jacobian(system, x, y).complex_eigenvalues();
    let mut max_re = f64::NEG_INFINITY;
    let mut im = 0.0;
    for l in eigs.iter() {
        if l.re > max_re {
            max_re = l.re;
            im = l.im.abs();
        }
    }
    (max_re, im)
}

fn classify(system: &FastSlowSystem, x: &[f64], y: &[f64]) -> Stability {
    let eigs = fd_jacobian(system, x, y).complex_eigenvalues();
    let mut pos = 0;
    let mut neg = 0;
    for l in eigs.iter() {
        if l.re.abs() <= HYPERBOLICITY_TOL {
            return Stability::NonHyperbolic;
        }
        if l.re > 0.0 {
            pos += 1;
        } else {
            neg += 1;
        }
    }
    match (pos, neg) {
        (0, _) => Stability::Attracting,
        (_, 0) => Stability::Repelling,
        _ => Stability::Saddle,
    }
}

/// Continues the fast-subsystem equilibrium along `y_path(t)`, `t ∈ [0, 1]`
/// sampled at `n_points`, starting from `x_seed` at `y_path(0)`.
///
/// Sign changes of the leading eigenvalue's real part are refined by
/// bisection and reported as Hopf or zero-eigenvalue crossings; Newton
/// failure terminates the branch with an event at the last good point.
pub fn equilibrium_branch_sweep(
    system: &FastSlowSystem,
    y_path: &dyn Fn(f64) -> Vec<f64>,
    n_points: usize,
    x_seed: &[f64],
) -> Result<EquilibriumBranch> {
    if n_points < 2 {
        return Err(Error::InvalidArgument("need at least 2 sample points".into()));
    }
    let mut branch = EquilibriumBranch {
        y_grid: Vec::with_capacity(n_points),
        x_values: Vec::with_capacity(n_points),
        stability: Vec::with_capacity(n_points),
        events: Vec::new(),
    };
    let mut x = x_seed.to_vec();
    let mut prev: Option<(f64, f64, Vec<f64>)> = None; // (t, max_re, x)
    for i in 0..n_points {
        let t = i as f64 / (n_points - 1) as f64;
        let y = y_path(t);
        match newton_solve(system, &x, &y) {
            Ok(sol) => {
                x = sol;
                let (max_re, _) = leading_eigenvalue(system, &x, &y);
                branch.y_grid.push(y.clone());
                branch.x_values.push(x.clone());
                branch.stability.push(classify(system, &x, &y));
                if let Some((t_prev, re_prev, x_prev)) = &prev {
                    if re_prev * max_re < 0.0 {
                        if let Ok(event) =
                            refine_crossing(system, y_path, *t_prev, t, x_prev.clone())
                        {
                            branch.events.push(event);
                        }
                    }
                }
                prev = Some((t, max_re, x.clone()));
            }
            Err(_) => {
                let y_last = branch
                    .y_grid
                    .last()
                    .cloned()
                    .unwrap_or_else(|| y_path(0.0));
                branch.events.push(BranchEvent {
                    y: y_last,
                    kind: EventKind::BranchTerminated,
                });
                break;
            }
        }
    }
    if branch.y_grid.is_empty() {
        return Err(Error::NoConvergence(
            "no equilibrium found at the path start".into(),
        ));
    }
    Ok(branch)
}

fn refine_crossing(
    system: &FastSlowSystem,
    y_path: &dyn Fn(f64) -> Vec<f64>,
    mut t_lo: f64,
    mut t_hi: f64,
    mut x: Vec<f64>,
) -> Result<BranchEvent> {
    let re_at = |t: f64, x_seed: &[f64]| -> Result<(f64, f64, Vec<f64>)> {
        let y = y_path(t);
        let sol = newton_solve(system, x_seed, &y)?;
        let (re, im) = leading_eigenvalue(system, &sol, &y);
        Ok((re, im, sol))
    };
    let (re_lo, _, x_lo) = re_at(t_lo, &x)?;
    let lo_negative = re_lo < 0.0;
    x = x_lo;
    let mut im_at_cross = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (t_lo + t_hi);
        let (re, im, sol) = re_at(mid, &x)?;
        x = sol;
        im_at_cross = im;
        if (re < 0.0) == lo_negative {
            t_lo = mid;
        } else {
            t_hi = mid;
        }
    }
    let kind = if im_at_cross > 1e-6 {
        EventKind::HopfCrossing
    } else {
        EventKind::ZeroEigenvalue
    };
    Ok(BranchEvent {
        y: y_path(0.5 * (t_lo + t_hi)),
        kind,
    })
}
