//! Dense solver for the continuous Lyapunov equation `A X + X Aᵀ + N = 0`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Largest real part over the eigenvalues of `a`.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues()
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Solves `A X + X Aᵀ + N = 0` for symmetric `X`, requiring `A` Hurwitz.
///
/// The symmetric unknowns are vectorized into an `m(m+1)/2` dense system and
/// eliminated with partial pivoting; for the catalog sizes (`m ≤ 4`) this is
/// exact to machine precision. The residual is checked against
/// `1e-12 * ‖N‖_∞`.
pub fn solve_lyapunov(a: &DMatrix<f64>, n: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let abscissa = spectral_abscissa(a);
    if abscissa >= -1e-12 {
        return Err(Error::NotHurwitz(abscissa));
    }
    solve_lyapunov_unchecked(a, n)
}

/// As [`solve_lyapunov`] but without the Hurwitz gate.
///
/// The algebraic solution exists and is unique whenever no two eigenvalues of
/// `A` sum to zero; callers use this to evaluate sign-variant closed forms on
/// non-attracting branches.
pub fn solve_lyapunov_unchecked(a: &DMatrix<f64>, n: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = a.nrows();
    if a.ncols() != m || n.nrows() != m || n.ncols() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: n.nrows(),
        });
    }
    let sym_tol = 1e-12 * n.amax().max(1.0);
    if (n - n.transpose()).amax() > sym_tol {
        return Err(Error::InvalidNoise("N must be symmetric".into()));
    }

    // unknowns: upper triangle (i <= j) of X
    let dim = m * (m + 1) / 2;
    let mut idx = vec![vec![0usize; m]; m];
    let mut count = 0;
    for i in 0..m {
        for j in i..m {
            idx[i][j] = count;
            idx[j][i] = count;
            count += 1;
        }
    }

    let mut system = DMatrix::<f64>::zeros(dim, dim);
    let mut rhs = DVector::<f64>::zeros(dim);
    // coefficient of x_{rs} in equation (p,q): from (A X + X Aᵀ)_{pq}
    // = Σ_r A_{pr} X_{rq} + Σ_r X_{pr} A_{qr}
    for p in 0..m {
        for q in p..m {
            let row = idx[p][q];
            for r in 0..m {
                system[(row, idx[r][q])] += a[(p, r)];
                system[(row, idx[p][r])] += a[(q, r)];
            }
            rhs[row] = -n[(p, q)];
        }
    }

    let lu = system.lu();
    let sol = lu
        .solve(&rhs)
        .ok_or_else(|| Error::NoConvergence("singular Lyapunov system".into()))?;

    let mut x = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            x[(i, j)] = sol[idx[i][j]];
            x[(j, i)] = sol[idx[i][j]];
        }
    }

    let residual = (a * &x + &x * a.transpose() + n).amax();
    let bound = 1e-12 * n.amax().max(f64::MIN_POSITIVE);
    if residual > bound {
        return Err(Error::NoConvergence(format!(
            "Lyapunov residual {residual:.3e} above {bound:.3e}"
        )));
    }
    Ok(x)
}
